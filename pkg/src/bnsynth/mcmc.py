"""Random-scan blocked Gibbs sampler over DAG rows.

Each iteration picks ``block_size`` distinct nodes uniformly at random and
redraws their parent sets jointly from the exact full conditional, found
by enumerating every admissible combination (in-degree cap plus
acyclicity). Per iteration the stream consumes one block draw followed by
one uniform used for the categorical inversion.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as rngmod
from .dag import Dag, EquivalenceKey, bits, candidate_parent_masks, descendants, popcount
from .dataset import BinaryDataset
from .score import HyperParams, PriorSpec, ScoreCache, _cache_for


class McmcError(ValueError):
    """Invalid sampler configuration."""


DEFAULT_RETAINED = 1000


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 20_000
    burn_in: int = 2_000
    lag: int | None = None
    block_size: int = 1
    max_parents: int = 3
    seed: int = 0
    candidate_limit: int = 500_000

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise McmcError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise McmcError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.lag is None:
            object.__setattr__(self, "lag", max(1, (self.iterations - self.burn_in) // DEFAULT_RETAINED))
        if self.lag < 1:
            raise McmcError("lag must be at least 1")
        if not 1 <= self.block_size <= 3:
            raise McmcError("block_size must be 1, 2 or 3")
        if self.max_parents < 1:
            raise McmcError("max_parents must be at least 1")
        if self.n_retained < 1:
            raise McmcError("schedule retains no samples: need iterations - burn_in >= lag")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in) // self.lag


@dataclass
class ChainOutput:
    config: McmcConfig
    d: int
    samples: list[Dag]
    log_posterior: list[float]
    names: tuple[str, ...] = ()
    hyper: HyperParams = field(default_factory=HyperParams)
    prior: PriorSpec = field(default_factory=PriorSpec)
    blocks: np.ndarray | None = None

    @property
    def seed(self) -> int:
        return self.config.seed

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.config.seed,
            "d": self.d,
            "names": list(self.names),
            "hyper": asdict(self.hyper),
            "prior": asdict(self.prior),
            "samples": [g.encode() for g in self.samples],
            "log_posterior": list(self.log_posterior),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ChainOutput":
        d = int(obj["d"])
        return cls(
            config=McmcConfig(**obj["config"]),
            d=d,
            samples=[Dag.decode(s, d) for s in obj["samples"]],
            log_posterior=[float(x) for x in obj["log_posterior"]],
            names=tuple(obj.get("names", ())),
            hyper=HyperParams(**obj.get("hyper", {})),
            prior=PriorSpec(**obj.get("prior", {})),
        )


def _effective_cap(d: int, max_parents: int) -> int:
    return min(max_parents, d - 1)


def admissible_parent_sets(dag: Dag, node: int, max_parents: int) -> list[tuple[int, ...]]:
    """Parent sets for ``node`` that keep ``dag`` (other rows fixed) acyclic."""
    if not 0 <= node < dag.d:
        raise McmcError(f"node {node} out of range")
    blocked = descendants(dag.rows, node)
    cands = candidate_parent_masks(dag.d, node, _effective_cap(dag.d, max_parents))
    return [bits(m) for m in cands if not m & blocked]


def _enumerate_block(
    rows: list[int],
    block: Sequence[int],
    cands: Sequence[Sequence[int]],
    node_score: Callable[[int, int], float],
) -> tuple[list[tuple[int, ...]], list[float]]:
    """All admissible parent-mask tuples for ``block`` with their log weights.

    Block rows are cleared and then filled one at a time; a choice is
    admissible iff it avoids the current descendants of its node, which
    yields exactly the acyclic completions.
    """
    saved = [rows[b] for b in block]
    for b in block:
        rows[b] = 0
    combos: list[tuple[int, ...]] = []
    weights: list[float] = []
    chosen: list[int] = []

    def fill(pos: int, acc: float) -> None:
        if pos == len(block):
            combos.append(tuple(chosen))
            weights.append(acc)
            return
        b = block[pos]
        blocked = descendants(rows, b)
        for m in cands[b]:
            if m & blocked:
                continue
            rows[b] = m
            chosen.append(m)
            fill(pos + 1, acc + node_score(b, m))
            chosen.pop()
        rows[b] = 0

    fill(0, 0.0)
    for b, m in zip(block, saved):
        rows[b] = m
    return combos, weights


def _pick(weights: list[float], u: float) -> int:
    top = max(weights)
    cum = 0.0
    acc = []
    for w in weights:
        cum += math.exp(w - top)
        acc.append(cum)
    target = u * cum
    for i, c in enumerate(acc):
        if target < c:
            return i
    return len(acc) - 1


class _Scorer:
    """Per-chain memo of local log score plus local log prior."""

    def __init__(self, cache: ScoreCache, prior: PriorSpec) -> None:
        self.cache = cache
        self.prior = prior
        self.memo: dict[tuple[int, int], float] = {}

    def __call__(self, node: int, mask: int) -> float:
        key = (node, mask)
        v = self.memo.get(key)
        if v is None:
            v = self.cache.local(node, mask) + self.prior.local(popcount(mask))
            self.memo[key] = v
        return v


def _check_block(d: int, block: Sequence[int]) -> tuple[int, ...]:
    block = tuple(int(b) for b in block)
    if len(set(block)) != len(block):
        raise McmcError("block rows must be distinct")
    if any(not 0 <= b < d for b in block):
        raise McmcError("block row out of range")
    return block


def block_conditional(
    state: Dag,
    block: Sequence[int],
    data: BinaryDataset,
    hyper: HyperParams,
    prior: PriorSpec,
    max_parents: int,
    cache: ScoreCache | None = None,
) -> list[tuple[Dag, float]]:
    """The exact joint full conditional of the ``block`` rows as ``(dag, probability)`` pairs."""
    block = _check_block(state.d, block)
    scorer = _Scorer(_cache_for(data, hyper, cache), prior)
    k = _effective_cap(state.d, max_parents)
    cands = [candidate_parent_masks(state.d, i, k) for i in range(state.d)]
    rows = list(state.rows)
    combos, weights = _enumerate_block(rows, block, cands, scorer)
    top = max(weights)
    ps = np.exp(np.asarray(weights) - top)
    ps /= ps.sum()
    out = []
    for combo, p in zip(combos, ps):
        new = list(rows)
        for b, m in zip(block, combo):
            new[b] = m
        out.append((Dag._trusted(new), float(p)))
    return out


def gibbs_block_step(
    state: Dag,
    block: Sequence[int],
    data: BinaryDataset,
    hyper: HyperParams,
    prior: PriorSpec,
    cache: ScoreCache | None,
    rng: np.random.Generator,
    max_parents: int = 3,
) -> Dag:
    """Redraw the parent sets of ``block`` jointly from their full conditional."""
    block = _check_block(state.d, block)
    scorer = _Scorer(_cache_for(data, hyper, cache), prior)
    k = _effective_cap(state.d, max_parents)
    cands = [candidate_parent_masks(state.d, i, k) for i in range(state.d)]
    rows = list(state.rows)
    combos, weights = _enumerate_block(rows, block, cands, scorer)
    chosen = combos[_pick(weights, float(rng.random()))]
    for b, m in zip(block, chosen):
        rows[b] = m
    return Dag._trusted(rows)


def block_candidate_count(d: int, block_size: int, max_parents: int) -> int:
    """Upper bound on the enumerated combinations per block update."""
    k = _effective_cap(d, max_parents)
    per_node = sum(math.comb(d - 1, s) for s in range(k + 1))
    return per_node**block_size


def run_chain(
    data: BinaryDataset,
    hyper: HyperParams,
    prior: PriorSpec,
    config: McmcConfig,
    cache: ScoreCache | None = None,
    initial: Dag | None = None,
) -> ChainOutput:
    """Run one chain from ``initial`` (default: the empty graph)."""
    d = data.d
    m = config.block_size
    if m > d:
        raise McmcError(f"block_size {m} exceeds the number of variables {d}")
    k = _effective_cap(d, config.max_parents)
    bound = block_candidate_count(d, m, config.max_parents)
    if bound > config.candidate_limit:
        raise McmcError(
            f"block of {m} rows may enumerate {bound:,} parent-set combinations "
            f"(limit {config.candidate_limit:,}); lower block_size or max_parents"
        )
    scorer = _Scorer(_cache_for(data, hyper, cache), prior)
    cands = [candidate_parent_masks(d, i, k) for i in range(d)]
    if initial is None:
        rows = [0] * d
    else:
        if initial.d != d:
            raise McmcError("initial DAG dimension does not match the data")
        if initial.max_in_degree > k:
            raise McmcError("initial DAG exceeds max_parents")
        rows = list(initial.rows)

    local = [scorer(i, rows[i]) for i in range(d)]
    gen = rngmod.generator(config.seed, rngmod.CHAIN)
    blocks = np.empty((config.iterations, m), dtype=np.int16)
    samples: list[Dag] = []
    trace: list[float] = []
    for t in range(1, config.iterations + 1):
        if m == 1:
            block = (int(gen.integers(d)),)
        else:
            block = tuple(sorted(int(b) for b in gen.choice(d, size=m, replace=False)))
        u = float(gen.random())
        blocks[t - 1] = block
        if m == 1:
            b = block[0]
            blocked = descendants(rows, b)
            opts = [mm for mm in cands[b] if not mm & blocked]
            weights = [scorer(b, mm) for mm in opts]
            rows[b] = opts[_pick(weights, u)]
            local[b] = scorer(b, rows[b])
        else:
            combos, weights = _enumerate_block(rows, block, cands, scorer)
            chosen = combos[_pick(weights, u)]
            for b, mm in zip(block, chosen):
                rows[b] = mm
                local[b] = scorer(b, mm)
        if t > config.burn_in and (t - config.burn_in) % config.lag == 0:
            samples.append(Dag._trusted(rows))
            trace.append(math.fsum(local))
    return ChainOutput(
        config=config,
        d=d,
        samples=samples,
        log_posterior=trace,
        names=data.names,
        hyper=hyper,
        prior=prior,
        blocks=blocks,
    )


def empirical_distribution(samples: Sequence[Dag]) -> dict[str, float]:
    """Sample frequencies keyed by hex encoding, most frequent first (ties by encoding)."""
    counts = Counter(g.encode() for g in samples)
    total = len(samples)
    return {k: c / total for k, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))}


def class_distribution(samples: Sequence[Dag]) -> dict[EquivalenceKey, float]:
    counts = Counter(g.equivalence_key() for g in samples)
    total = len(samples)
    return {k: c / total for k, c in sorted(counts.items(), key=lambda kv: (-kv[1], str(kv[0])))}


def effective_sample_size(series: Sequence[float]) -> float:
    """ESS = M / (1 + 2 * sum of autocorrelations), summing lags until the first non-positive one."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10:
        raise ValueError(f"series too short for an ESS estimate ({n} < 10)")
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var <= 0.0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / acov[0]
    s = 0.0
    for t in range(1, n):
        if rho[t] <= 0:
            break
        s += rho[t]
    return float(n / (1.0 + 2.0 * s))
