"""Utility statistics computed on original and synthetic datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import BinaryDataset, ParentConfig
from .special import chi2_sf, norm_ppf, t_ppf


class UndefinedStatistic(ArithmeticError):
    """The statistic has no value on this dataset (empty cell or zero margin)."""


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    level: float

    def __post_init__(self) -> None:
        if self.low > self.high:
            raise ValueError(f"interval low {self.low} exceeds high {self.high}")

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, x: float) -> bool:
        return self.low <= x <= self.high


def event_counts(data: BinaryDataset, node: int, event: ParentConfig) -> tuple[int, int]:
    """``(z, n)``: rows where ``event`` holds, and how many of those have ``node = 1``."""
    sel = event.mask(data)
    n = int(sel.sum())
    z = int(data.cells[sel, node].sum())
    return z, n


def conditional_mle(data: BinaryDataset, node: int, event: ParentConfig) -> float:
    z, n = event_counts(data, node, event)
    if n == 0:
        raise UndefinedStatistic(f"conditioning event {event} never occurs")
    return z / n


def wald_ci(z: int, n: int, level: float = 0.95) -> Interval:
    if n < 1:
        raise ValueError("wald_ci needs at least one trial")
    p = z / n
    q = norm_ppf((1 + level) / 2)
    half = q * math.sqrt(p * (1 - p) / n)
    return Interval(max(0.0, p - half), min(1.0, p + half), level)


def overlap_measure(a: Interval, b: Interval) -> float:
    """Overlap of two intervals, scaled so identical intervals give 1 and disjoint ones 0."""
    total = (a.high - a.low) + (b.high - b.low)
    if total <= 0:
        raise UndefinedStatistic("both intervals are degenerate")
    inner = min(a.high, b.high) - max(a.low, b.low)
    if inner <= 0:
        return 0.0
    return min(1.0, 2.0 * inner / total)


def contingency(data: BinaryDataset, i: int, j: int) -> np.ndarray:
    """2x2 table; entry ``[u, v]`` counts rows with ``X_i = u`` and ``X_j = v``."""
    idx = data.cells[:, i].astype(np.int64) * 2 + data.cells[:, j]
    return np.bincount(idx, minlength=4).reshape(2, 2)


def pearson_statistic(table: np.ndarray) -> float:
    table = np.asarray(table, dtype=float)
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise UndefinedStatistic("contingency table has a zero margin")
    n = table.sum()
    (a, b), (c, d) = table
    # closed form for 2x2, no continuity correction
    return float(n * (a * d - b * c) ** 2 / (rows[0] * rows[1] * cols[0] * cols[1]))


def chi2_independence(data: BinaryDataset, i: int, j: int) -> float:
    """Pearson chi-square p-value (1 df) for independence of two columns."""
    if i == j:
        raise ValueError("chi-square test needs two distinct columns")
    return chi2_sf(pearson_statistic(contingency(data, i, j)), 1)


def s2_combine(values: Sequence[float], level: float = 0.98) -> tuple[float, Interval]:
    """Mean of five per-dataset values with a t(4) interval for it."""
    v = np.asarray(values, dtype=float)
    if v.size != 5:
        raise ValueError(f"s2_combine needs exactly 5 values, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("s2_combine needs finite values")
    if not 0 <= level < 1:
        raise ValueError("level must be in [0, 1)")
    mean = float(v.mean())
    s = float(v.std(ddof=1))
    half = 0.0 if level == 0 else t_ppf(1 - (1 - level) / 2, 4) * s / math.sqrt(5)
    return mean, Interval(mean - half, mean + half, level)


KINDS = ("ci_overlap", "conditional_mle", "chi2_pvalue")
_ALIASES = {"overlap": "ci_overlap", "mle": "conditional_mle", "chi2": "chi2_pvalue"}


@dataclass(frozen=True)
class StatisticSpec:
    """One statistic of a dataset.

    ``ci_overlap`` and ``conditional_mle`` target ``P(node = 1 | event)``;
    ``chi2_pvalue`` tests independence of the columns in ``pair``.
    ``level`` is the Wald level used by ``ci_overlap``.
    """

    kind: str
    node: int = 0
    event: ParentConfig = ParentConfig((), ())
    pair: tuple[int, int] = (0, 1)
    level: float = 0.95

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown statistic kind {self.kind!r}; expected one of {KINDS}")
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.kind == "chi2_pvalue" and self.pair[0] == self.pair[1]:
            raise ValueError("chi-square pair must name two distinct columns")
        if self.kind != "chi2_pvalue" and self.node in self.event.parent_set:
            raise ValueError("target node cannot appear in its own conditioning event")

    @property
    def label(self) -> str:
        if self.kind == "chi2_pvalue":
            return f"chi2[{self.pair[0]},{self.pair[1]}]"
        cond = ",".join(f"{p}={v}" for p, v in zip(self.event.parent_set, self.event.assignment))
        name = "overlap" if self.kind == "ci_overlap" else "mle"
        return f"{name}[{self.node}|{cond}]" if cond else f"{name}[{self.node}]"

    def validate(self, d: int) -> None:
        idx = self.pair if self.kind == "chi2_pvalue" else (self.node, *self.event.parent_set)
        if any(not 0 <= i < d for i in idx):
            raise ValueError(f"statistic {self.label} references a column outside 0..{d - 1}")

    def evaluate(self, y: BinaryDataset, x: BinaryDataset | None = None) -> float:
        """Value on synthetic data ``y``; ``ci_overlap`` also needs the original ``x``."""
        if self.kind == "conditional_mle":
            return conditional_mle(y, self.node, self.event)
        if self.kind == "chi2_pvalue":
            return chi2_independence(y, *self.pair)
        if x is None:
            raise ValueError("ci_overlap needs the original dataset")
        zy, ny = event_counts(y, self.node, self.event)
        if ny == 0:
            raise UndefinedStatistic(f"conditioning event of {self.label} never occurs")
        zx, nx = event_counts(x, self.node, self.event)
        if nx == 0:
            raise UndefinedStatistic(f"conditioning event of {self.label} never occurs in the original data")
        return overlap_measure(wald_ci(zx, nx, self.level), wald_ci(zy, ny, self.level))

    def original_value(self, x: BinaryDataset) -> float:
        """The statistic on the original data (``ci_overlap`` is 1 by construction)."""
        return self.evaluate(x, x)

    @classmethod
    def parse(cls, text: str, names: Sequence[str] = ()) -> "StatisticSpec":
        """Parse ``mle:X2|X1=0``, ``overlap:X2|X1=0@0.95`` or ``chi2:X1,X2``.

        Column tokens are names from ``names`` or 0-based indices.
        """
        def col(tok: str) -> int:
            tok = tok.strip()
            if tok in names:
                return list(names).index(tok)
            if tok.isdigit():
                return int(tok)
            raise ValueError(f"unknown column {tok!r} in statistic {text!r}")

        try:
            kind, _, body = text.strip().partition(":")
            kind = _ALIASES.get(kind.strip(), kind.strip())
            level = 0.95
            if "@" in body:
                body, _, lv = body.partition("@")
                level = float(lv)
            if kind == "chi2_pvalue":
                a, b = body.split(",")
                return cls(kind, pair=(col(a), col(b)))
            target, _, cond = body.partition("|")
            pairs = []
            for part in filter(None, (p.strip() for p in cond.split(","))):
                var, _, val = part.partition("=")
                pairs.append((col(var), int(val)))
            pairs.sort()
            event = ParentConfig(tuple(p for p, _ in pairs), tuple(v for _, v in pairs))
            return cls(kind, node=col(target), event=event, level=level)
        except ValueError as exc:
            raise ValueError(f"cannot parse statistic {text!r}: {exc}") from None
