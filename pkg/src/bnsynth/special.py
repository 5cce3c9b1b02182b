"""Distribution functions used by the interval and test statistics."""

from __future__ import annotations

from scipy import special as sc


def chi2_sf(x: float, df: int = 1) -> float:
    """Upper tail probability of a chi-square variable with ``df`` degrees of freedom."""
    if x <= 0:
        return 1.0
    return float(sc.chdtrc(df, x))


def norm_ppf(p: float) -> float:
    """Standard normal quantile."""
    if not 0 < p < 1:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    return float(sc.ndtri(p))


def t_ppf(p: float, df: float) -> float:
    """Student-t quantile with ``df`` degrees of freedom."""
    if not 0 < p < 1:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    return float(sc.stdtrit(df, p))
