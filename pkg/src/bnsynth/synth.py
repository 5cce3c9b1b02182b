"""Posterior-predictive synthetic data.

For every retained structure ``G_m`` a parameter draw ``theta_m`` is taken
from its Beta conditional posterior, a synthetic table ``Y_m`` with the
original row count is simulated by ancestral sampling, and the requested
statistics are evaluated on it. Only the first ``keep_datasets`` tables
are held in memory.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .dag import Dag, bits
from .dataset import BinaryDataset, config_index, sufficient_stats, write_csv
from .exact import ExactPosterior
from .mcmc import ChainOutput, McmcConfig, effective_sample_size, empirical_distribution
from .score import HyperParams
from .utility import Interval, StatisticSpec, UndefinedStatistic, s2_combine

HPD_MASS = 0.98


@dataclass(frozen=True)
class ThetaAssignment:
    """Success probabilities per node and parent configuration, tied to ``dag``."""

    dag: Dag
    tables: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.tables) != self.dag.d:
            raise ValueError("one probability table per node is required")
        tables = []
        for i, t in enumerate(self.tables):
            t = np.asarray(t, dtype=float)
            expect = 1 << len(self.dag.parents(i))
            if t.shape != (expect,):
                raise ValueError(f"node {i}: table has shape {t.shape}, expected ({expect},)")
            if np.any((t < 0) | (t > 1)) or not np.all(np.isfinite(t)):
                raise ValueError(f"node {i}: probabilities must lie in [0, 1]")
            tables.append(t)
        object.__setattr__(self, "tables", tuple(tables))

    def to_dict(self) -> dict:
        return {"dag": self.dag.encode(), "tables": [t.tolist() for t in self.tables]}


class _StatsMemo:
    def __init__(self, data: BinaryDataset) -> None:
        self.data = data
        self.memo: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def get(self, node: int, mask: int) -> tuple[np.ndarray, np.ndarray]:
        key = (node, mask)
        hit = self.memo.get(key)
        if hit is None:
            st = sufficient_stats(self.data, node, bits(mask))
            hit = (st.counts, st.ones)
            self.memo[key] = hit
        return hit


def _beta(gen: np.random.Generator, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Beta via two Gamma draws: X ~ Gamma(a), Y ~ Gamma(b), X / (X + Y).
    x = gen.standard_gamma(a)
    y = gen.standard_gamma(b)
    s = x + y
    return np.where(s > 0, x / np.where(s > 0, s, 1.0), 0.5)


def _sample_theta(dag: Dag, memo: _StatsMemo, hyper: HyperParams, gen: np.random.Generator) -> ThetaAssignment:
    tables = []
    for i, r in enumerate(dag.rows):
        n, z = memo.get(i, r)
        tables.append(_beta(gen, hyper.alpha + z, hyper.beta + (n - z)))
    return ThetaAssignment(dag, tuple(tables))


def sample_theta(
    dag: Dag, data: BinaryDataset, hyper: HyperParams, rng: np.random.Generator
) -> ThetaAssignment:
    """Independent Beta(alpha + z_j, beta + n_j - z_j) draws, node by node in index order."""
    if dag.d != data.d:
        raise ValueError(f"DAG has {dag.d} nodes but data has {data.d} columns")
    return _sample_theta(dag, _StatsMemo(data), hyper, rng)


def ancestral_sample(
    dag: Dag,
    theta: ThetaAssignment,
    n: int,
    rng: np.random.Generator,
    names: Sequence[str] = (),
) -> BinaryDataset:
    """``n`` i.i.d. rows, drawing nodes in topological order (one uniform vector per node)."""
    if theta.dag != dag:
        raise ValueError("theta was drawn for a different DAG")
    if n < 1:
        raise ValueError("n must be at least 1")
    cells = np.zeros((n, dag.d), dtype=np.uint8)
    for node in dag.topological_order():
        ps = dag.parents(node)
        p = theta.tables[node][config_index(cells, ps)] if ps else theta.tables[node][0]
        cells[:, node] = rng.random(n) < p
    return BinaryDataset(cells, tuple(names))


def hpd_interval(values: Sequence[float], mass: float = HPD_MASS) -> tuple[float, float]:
    """Shortest window of sorted values holding ``ceil(mass * M)`` of them."""
    s = np.sort(np.asarray(values, dtype=float))
    m = s.size
    if m == 0:
        raise ValueError("no values")
    k = max(1, math.ceil(mass * m - 1e-9))
    widths = s[k - 1:] - s[: m - k + 1]
    i = int(np.argmin(widths))
    return float(s[i]), float(s[i + k - 1])


@dataclass
class StatisticSeries:
    """Posterior-predictive draws of one statistic; ``NaN`` marks an undefined draw."""

    spec: StatisticSpec
    values: np.ndarray
    original: float | None = None

    @property
    def n_undefined(self) -> int:
        return int(np.isnan(self.values).sum())

    @property
    def defined(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]

    @property
    def mean(self) -> float:
        v = self.defined
        return float(v.mean()) if v.size else float("nan")

    def hpd(self, mass: float = HPD_MASS) -> tuple[float, float]:
        v = self.defined
        return hpd_interval(v, mass) if v.size else (float("nan"), float("nan"))

    @property
    def ess(self) -> float | None:
        v = self.defined
        return effective_sample_size(v) if v.size >= 10 else None

    def summary(self, mass: float = HPD_MASS) -> dict:
        low, high = self.hpd(mass)
        return {
            "statistic": self.spec.label,
            "kind": self.spec.kind,
            "mean": self.mean,
            "hpd_low": low,
            "hpd_high": high,
            "hpd_mass": mass,
            "n_defined": int(self.defined.size),
            "n_undefined": self.n_undefined,
            "ess": self.ess,
            "original": self.original,
        }


@dataclass
class PredictiveResult:
    series: list[StatisticSeries]
    datasets: list[BinaryDataset] = field(default_factory=list)
    seed: int = 0

    @property
    def M(self) -> int:
        return self.series[0].values.size if self.series else 0


def _evaluate(spec: StatisticSpec, y: BinaryDataset, x: BinaryDataset) -> float:
    try:
        return spec.evaluate(y, x)
    except UndefinedStatistic:
        return float("nan")


def posterior_predictive(
    data: BinaryDataset,
    chain: ChainOutput,
    hyper: HyperParams,
    specs: Sequence[StatisticSpec],
    keep_datasets: int = 0,
    seed: int | None = None,
    n: int | None = None,
    threads: int = 1,
) -> PredictiveResult:
    """Predictive draws of every statistic, one per retained structure.

    Draw ``m`` uses its own stream ``(seed, PREDICTIVE, m)``, so results do
    not depend on ``threads``. ``seed`` defaults to the chain's seed.
    """
    if not chain.samples:
        raise ValueError("chain holds no samples")
    if chain.d != data.d:
        raise ValueError(f"chain has {chain.d} nodes but data has {data.d} columns")
    for s in specs:
        s.validate(data.d)
    seed = chain.seed if seed is None else seed
    n_rows = data.n if n is None else n
    memo = _StatsMemo(data)
    samples = chain.samples

    def one(m: int) -> tuple[list[float], BinaryDataset | None]:
        gen = rngmod.generator(seed, rngmod.PREDICTIVE, m)
        dag = samples[m]
        theta = _sample_theta(dag, memo, hyper, gen)
        y = ancestral_sample(dag, theta, n_rows, gen, data.names)
        vals = [_evaluate(s, y, data) for s in specs]
        return vals, (y if m < keep_datasets else None)

    idx = range(len(samples))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, idx, chunksize=max(1, len(samples) // (4 * threads))))
    else:
        out = [one(m) for m in idx]

    values = np.array([o[0] for o in out], dtype=float).reshape(len(samples), len(specs))
    series = []
    for j, s in enumerate(specs):
        try:
            orig = s.original_value(data)
        except UndefinedStatistic:
            orig = None
        series.append(StatisticSeries(s, values[:, j], orig))
    kept = [o[1] for o in out if o[1] is not None]
    return PredictiveResult(series, kept, seed)


def chain_from_distribution(
    distribution: dict[str, float],
    d: int,
    draws: int,
    seed: int,
    names: Sequence[str] = (),
    hyper: HyperParams | None = None,
) -> ChainOutput:
    """I.i.d. structures from a released empirical distribution, in place of the MCMC step."""
    codes = sorted(distribution)
    p = np.array([distribution[c] for c in codes], dtype=float)
    if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("released distribution must be non-negative and sum to 1")
    gen = rngmod.generator(seed, rngmod.CHAIN)
    picks = gen.choice(len(codes), size=draws, p=p / p.sum())
    dags = {c: Dag.decode(c, d) for c in codes}
    samples = [dags[codes[i]] for i in picks]
    config = McmcConfig(iterations=draws, burn_in=0, lag=1, seed=seed)
    return ChainOutput(config, d, samples, [float("nan")] * draws, tuple(names), hyper or HyperParams())


RELEASE_MODES = {
    1: "posterior of G as an empirical distribution",
    2: "all M synthetic datasets",
    3: "a subset of 5 to 10 synthetic datasets",
    4: "posterior-predictive samples of the statistics",
    5: "means and HPD intervals of the statistics",
}


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.floating):
        return _json_safe(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def release_output(
    mode: int,
    out_dir: str | Path,
    chain: ChainOutput,
    result: PredictiveResult | None = None,
    subset: int = 5,
) -> list[Path]:
    """Write one of the five release artifacts to ``out_dir`` and return the paths written."""
    if mode not in RELEASE_MODES:
        raise ValueError(f"release mode must be one of 1..5, got {mode}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if mode == 1:
        return [
            dump_json(
                {
                    "mode": 1,
                    "d": chain.d,
                    "names": list(chain.names),
                    "M": len(chain.samples),
                    "distribution": empirical_distribution(chain.samples),
                },
                out / "release_posterior.json",
            )
        ]
    if result is None:
        raise ValueError(f"release mode {mode} needs the output of posterior_predictive")
    if mode in (2, 3):
        want = len(chain.samples) if mode == 2 else subset
        if mode == 3 and not 5 <= subset <= 10:
            raise ValueError("mode 3 releases between 5 and 10 datasets")
        if len(result.datasets) < want:
            raise ValueError(
                f"release mode {mode} needs {want} retained datasets but only "
                f"{len(result.datasets)} were kept; rerun with keep_datasets >= {want}"
            )
        width = max(4, len(str(want)))
        paths = []
        for m, y in enumerate(result.datasets[:want], start=1):
            p = out / f"synthetic_{m:0{width}d}.csv"
            write_csv(y, p)
            paths.append(p)
        return paths
    if mode == 4:
        return [
            dump_json(
                {
                    "mode": 4,
                    "M": result.M,
                    "seed": result.seed,
                    "statistics": [
                        {"statistic": s.spec.label, "kind": s.spec.kind, "values": s.values.tolist()}
                        for s in result.series
                    ],
                },
                out / "release_statistics.json",
            )
        ]
    return [
        dump_json(
            {"mode": 5, "M": result.M, "seed": result.seed, "summaries": [s.summary() for s in result.series]},
            out / "release_summary.json",
        )
    ]


def mle_theta(dag: Dag, data: BinaryDataset, empty_cell: float = 0.5) -> ThetaAssignment:
    """Per-configuration ``z_j / n_j``; configurations never observed get ``empty_cell``."""
    tables = []
    for i, r in enumerate(dag.rows):
        st = sufficient_stats(data, i, bits(r))
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(st.counts > 0, st.ones / np.maximum(st.counts, 1), empty_cell)
        tables.append(t)
    return ThetaAssignment(dag, tuple(tables))


def top_network(source: ChainOutput | ExactPosterior) -> Dag:
    """Highest posterior (or most frequent) DAG; ties go to the smallest encoding."""
    if isinstance(source, ExactPosterior):
        return source.top()
    if not source.samples:
        raise ValueError("chain holds no samples")
    code = next(iter(empirical_distribution(source.samples)))
    return Dag.decode(code, source.d)


@dataclass
class S2Result:
    spec: StatisticSpec
    values: list[float]
    point: float
    interval: Interval

    def summary(self) -> dict:
        return {
            "statistic": self.spec.label,
            "kind": self.spec.kind,
            "values": self.values,
            "point": self.point,
            "low": self.interval.low,
            "high": self.interval.high,
            "level": self.interval.level,
        }


def s2_pipeline(
    data: BinaryDataset,
    source: ChainOutput | ExactPosterior,
    specs: Sequence[StatisticSpec],
    seed: int,
    level: float = 0.98,
) -> list[S2Result]:
    """Five datasets from the top network at its MLE, combined with the t(4) rule.

    Raises ``UndefinedStatistic`` if any statistic is undefined on a dataset.
    """
    dag = top_network(source)
    theta = mle_theta(dag, data)
    gen = rngmod.generator(seed, rngmod.S2)
    ys = [ancestral_sample(dag, theta, data.n, gen, data.names) for _ in range(5)]
    out = []
    for s in specs:
        vals = [s.evaluate(y, data) for y in ys]
        point, ci = s2_combine(vals, level)
        out.append(S2Result(s, vals, point, ci))
    return out
