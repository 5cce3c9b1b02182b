"""Simulation scenarios, replication runner and gamma calibration."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from . import rng as rngmod
from .dag import Dag, enumerate_dags, popcount, MAX_ENUMERATE
from .dataset import BinaryDataset
from .exact import exact_posterior, total_variation, true_network_posterior
from .mcmc import McmcConfig, class_distribution, run_chain
from .score import HyperParams, PriorSpec, ScoreCache, log_marginal_likelihood
from .synth import ThetaAssignment, ancestral_sample, posterior_predictive, s2_pipeline
from .utility import StatisticSpec, UndefinedStatistic

SCENARIO_SEED = 12345
THETA_RANGE = (0.2, 0.8)
DEFAULT_GRID = tuple(round(0.5 * i, 10) for i in range(21))

# 0-based edges (parent, child); X1..Xd in the original labelling map to 0..d-1.
NETWORKS = {
    3: [(0, 1)],
    4: [(0, 1), (3, 2)],
    7: [(0, 1), (5, 4), (6, 4), (2, 3), (4, 3)],
}
SAMPLE_SIZES = {3: (500, 1000, 5000), 4: (1000, 5000), 7: (2000, 5000)}


@dataclass(frozen=True)
class Scenario:
    id: str
    d: int
    n: int
    truth: Dag
    theta_truth: ThetaAssignment
    replications: int = 10
    seed: int = SCENARIO_SEED
    statistics: tuple[StatisticSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.truth.d != self.d or self.theta_truth.dag != self.truth:
            raise ValueError("truth and theta_truth must describe the same d-node network")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")

    def replication_seed(self, r: int) -> int:
        return rngmod.derive_seed(self.seed, rngmod.REPLICATION, self.n, r)

    def simulate(self, r: int) -> BinaryDataset:
        """Original dataset of replication ``r``; depends only on ``(seed, n, r)``."""
        gen = rngmod.generator(self.replication_seed(r), rngmod.DATA)
        return ancestral_sample(self.truth, self.theta_truth, self.n, gen)


def draw_theta(truth: Dag, seed: int, low: float = THETA_RANGE[0], high: float = THETA_RANGE[1]) -> ThetaAssignment:
    gen = rngmod.generator(seed, rngmod.THETA_TRUTH, truth.d)
    return ThetaAssignment(
        truth, tuple(gen.uniform(low, high, size=1 << len(truth.parents(i))) for i in range(truth.d))
    )


def designated_statistics(d: int) -> tuple[StatisticSpec, ...]:
    specs = [
        StatisticSpec.parse("overlap:1|0=0"),
        StatisticSpec.parse("mle:1|0=0"),
        StatisticSpec.parse("chi2:0,1"),
    ]
    if d == 7:
        specs.append(StatisticSpec.parse("chi2:0,4"))
    return tuple(specs)


def builtin_scenarios(seed: int = SCENARIO_SEED, replications: int = 10) -> list[Scenario]:
    """The three simulation networks at their sample sizes.

    The true parameters are drawn once per network, so scenarios sharing
    a network differ only in sample size.
    """
    out = []
    for d, edges in NETWORKS.items():
        truth = Dag.from_edges(d, edges)
        theta = draw_theta(truth, seed)
        for n in SAMPLE_SIZES[d]:
            out.append(
                Scenario(f"d{d}_n{n}", d, n, truth, theta, replications, seed, designated_statistics(d))
            )
    return out


def get_scenario(scenario_id: str, seed: int = SCENARIO_SEED, replications: int = 10) -> Scenario:
    table = {s.id: s for s in builtin_scenarios(seed, replications)}
    if scenario_id not in table:
        raise KeyError(f"unknown scenario {scenario_id!r}; valid ids: {', '.join(table)}")
    return table[scenario_id]


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Ordered map; worker count never changes results because every item carries its own seed."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass
class ScenarioReport:
    scenario: str
    d: int
    n: int
    truth: str
    prior: PriorSpec
    hyper: HyperParams
    config: McmcConfig
    methods: tuple[str, ...]
    replications: list[dict]
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "d": self.d,
            "n": self.n,
            "truth": self.truth,
            "prior": asdict(self.prior),
            "hyper": asdict(self.hyper),
            "config": asdict(self.config),
            "methods": list(self.methods),
            "summary": self.summary,
            "replications": self.replications,
        }

    CSV_FIELDS = ("scenario", "replication", "statistic", "method", "original", "point", "low", "high", "n_undefined")

    def csv_rows(self) -> list[dict]:
        rows = []
        for rep in self.replications:
            for method, key in (("S1", "s1"), ("S2", "s2")):
                for st in rep.get(key) or []:
                    rows.append(
                        {
                            "scenario": self.scenario,
                            "replication": rep["replication"],
                            "statistic": st["statistic"],
                            "method": method,
                            "original": st.get("original"),
                            "point": st.get("mean", st.get("point")),
                            "low": st.get("hpd_low", st.get("low")),
                            "high": st.get("hpd_high", st.get("high")),
                            "n_undefined": st.get("n_undefined", 0),
                        }
                    )
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in self.csv_rows():
            w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def _replicate(job: tuple) -> dict:
    s, prior, hyper, config, methods, r, with_exact = job
    data = s.simulate(r)
    rep_seed = s.replication_seed(r)
    cache = ScoreCache(data, hyper)
    cfg = replace(config, seed=rngmod.derive_seed(rep_seed, rngmod.CHAIN))
    chain = run_chain(data, hyper, prior, cfg, cache)
    cls = class_distribution(chain.samples)
    truth_key = s.truth.equivalence_key()
    mode_key = next(iter(cls))
    out: dict = {
        "replication": r,
        "chain_seed": cfg.seed,
        "truth_class_probability": cls.get(truth_key, 0.0),
        "truth_is_mode": mode_key == truth_key,
        "mode_class": str(mode_key),
        "mode_class_probability": cls[mode_key],
    }
    if with_exact and s.d <= MAX_ENUMERATE:
        ep = exact_posterior(data, hyper, prior, cfg.max_parents, cache)
        tp = true_network_posterior(ep, s.truth)
        tv = total_variation(chain.samples, ep)
        exact_mode = min(ep.by_class.items(), key=lambda kv: (-kv[1], str(kv[0])))[0]
        out["exact"] = {
            "truth_probability": tp.probability,
            "truth_rank": tp.rank,
            "truth_class_probability": tp.class_probability,
            "truth_is_mode": exact_mode == truth_key,
            "tv_dag": tv.dag,
            "tv_class": tv.cls,
        }
    if "S1" in methods:
        res = posterior_predictive(data, chain, hyper, s.statistics, seed=rngmod.derive_seed(rep_seed, rngmod.PREDICTIVE))
        out["s1"] = [ser.summary() for ser in res.series]
    if "S2" in methods:
        s2 = []
        for spec in s.statistics:
            try:
                res2 = s2_pipeline(data, chain, [spec], seed=rngmod.derive_seed(rep_seed, rngmod.S2))[0]
                row = res2.summary()
            except UndefinedStatistic as exc:
                row = {"statistic": spec.label, "kind": spec.kind, "undefined": str(exc)}
            try:
                row["original"] = spec.original_value(data)
            except UndefinedStatistic:
                row["original"] = None
            s2.append(row)
        out["s2"] = s2
    return out


def summarize(replications: Iterable[dict], key: str = "truth_class_probability", mode: str = "truth_is_mode") -> dict:
    reps = list(replications)
    won = [r[key] for r in reps if r[mode]]
    lost = [r[key] for r in reps if not r[mode]]
    return {
        "replications": len(reps),
        "truth_is_mode": len(won),
        "mean_probability_when_mode": float(np.mean(won)) if won else None,
        "mean_probability_otherwise": float(np.mean(lost)) if lost else None,
    }


def run_scenario(
    s: Scenario,
    prior: PriorSpec,
    hyper: HyperParams,
    mcmc_config: McmcConfig,
    methods: Sequence[str] = ("S1", "S2"),
    threads: int = 1,
    with_exact: bool = True,
) -> ScenarioReport:
    methods = tuple(m.upper() for m in methods)
    bad = set(methods) - {"S1", "S2"}
    if bad:
        raise ValueError(f"unknown methods {sorted(bad)}; choose from S1, S2")
    jobs = [(s, prior, hyper, mcmc_config, methods, r, with_exact) for r in range(s.replications)]
    reps = parallel_map(_replicate, jobs, threads)
    summary = {"chain": summarize(reps)}
    exact_reps = [r["exact"] for r in reps if "exact" in r]
    if exact_reps:
        summary["exact"] = summarize(exact_reps)
        summary["exact"]["max_tv_class"] = max(r["tv_class"] for r in exact_reps)
        summary["exact"]["max_tv_dag"] = max(r["tv_dag"] for r in exact_reps)
    return ScenarioReport(
        s.id, s.d, s.n, s.truth.encode(), prior, hyper, mcmc_config, methods, reps, summary
    )


@dataclass
class CalibrationResult:
    scenario: str
    grid: list[float]
    probabilities: list[float]
    spread: list[float]
    per_replication: list[list[float]]
    threshold: float
    gamma_star: float | None
    method: str

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.probabilities):
            raise ValueError("grid and probabilities differ in length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly ascending")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "method": self.method,
            "threshold": self.threshold,
            "gamma_star": self.gamma_star,
            "grid": self.grid,
            "probabilities": self.probabilities,
            "spread": self.spread,
            "per_replication": self.per_replication,
        }


def _exact_curve(data: BinaryDataset, truth: Dag, grid: Sequence[float], hyper: HyperParams, k: int) -> list[float]:
    cache = ScoreCache(data, hyper)
    truth_key = truth.equivalence_key()
    lml, size, in_class = [], [], []
    for g in enumerate_dags(data.d, k):
        lml.append(log_marginal_likelihood(g, data, hyper, cache))
        size.append(sum(popcount(r) for r in g.rows))
        in_class.append(g.equivalence_key() == truth_key)
    lml_a = np.asarray(lml)
    size_a = np.asarray(size, dtype=float)
    mask = np.asarray(in_class)
    curve = []
    for gamma in grid:
        lw = lml_a - gamma * size_a
        curve.append(float(np.exp(logsumexp(lw[mask]) - logsumexp(lw))))
    return curve


def _mcmc_curve(
    data: BinaryDataset, truth: Dag, grid: Sequence[float], hyper: HyperParams, config: McmcConfig
) -> list[float]:
    cache = ScoreCache(data, hyper)
    key = truth.equivalence_key()
    return [
        class_distribution(run_chain(data, hyper, PriorSpec(gamma, 1.0), config, cache).samples).get(key, 0.0)
        for gamma in grid
    ]


def _calibrate_one(job: tuple) -> list[float]:
    s, r, grid, hyper, method, config = job
    data = s.simulate(r)
    if method == "exact":
        return _exact_curve(data, s.truth, grid, hyper, min(config.max_parents, s.d - 1) if config else s.d - 1)
    cfg = replace(config, seed=rngmod.derive_seed(s.replication_seed(r), rngmod.CHAIN))
    return _mcmc_curve(data, s.truth, grid, hyper, cfg)


def calibrate_gamma(
    s: Scenario,
    grid: Sequence[float] = DEFAULT_GRID,
    threshold: float = 0.85,
    hyper: HyperParams = HyperParams(),
    use_mcmc: bool = False,
    mcmc_config: McmcConfig | None = None,
    threads: int = 1,
) -> CalibrationResult:
    """Truth-class posterior probability against gamma (exponent 1), averaged over replications.

    ``gamma_star`` is the smallest grid value whose mean probability exceeds ``threshold``.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty gamma grid")
    if any(g < 0 for g in grid):
        raise ValueError("gamma values must be non-negative")
    method = "mcmc" if use_mcmc else "exact"
    if method == "exact" and s.d > MAX_ENUMERATE:
        raise ValueError(f"exact calibration needs d <= {MAX_ENUMERATE}; pass use_mcmc=True")
    if method == "mcmc" and mcmc_config is None:
        mcmc_config = McmcConfig()
    jobs = [(s, r, grid, hyper, method, mcmc_config) for r in range(s.replications)]
    curves = parallel_map(_calibrate_one, jobs, threads)
    arr = np.asarray(curves)
    mean = arr.mean(axis=0)
    star = next((g for g, p in zip(grid, mean) if p > threshold), None)
    return CalibrationResult(
        s.id,
        grid,
        [float(x) for x in mean],
        [float(x) for x in arr.std(axis=0)],
        [[float(x) for x in c] for c in curves],
        threshold,
        star,
        method,
    )


def nondecreasing_until_saturation(curve: Sequence[float], tol: float = 1e-12) -> bool:
    """True if the curve never drops before it first reaches its maximum."""
    c = np.asarray(curve, dtype=float)
    peak = int(np.argmax(c >= c.max() - tol))
    return bool(np.all(np.diff(c[: peak + 1]) >= -tol))
