"""Beta-Bernoulli marginal likelihood and the penalizing modular prior."""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dag import Dag, bits, popcount
from .dataset import BinaryDataset, SufficientStats, sufficient_stats


class StaleCacheError(RuntimeError):
    """A score cache was used with data or hyperparameters it was not built for."""


@dataclass(frozen=True)
class HyperParams:
    """Beta(alpha, beta) prior shared by every conditional probability."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta hyperparameters must be positive, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class PriorSpec:
    """Network prior ``p(G) ~ exp(-gamma * sum_j |pa(X_j)|**exponent)``.

    ``gamma = 0`` is the uniform prior over DAGs.
    """

    gamma: float = 0.0
    exponent: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not self.exponent > 0:
            raise ValueError(f"exponent must be positive, got {self.exponent}")

    def local(self, n_parents: int) -> float:
        if n_parents == 0 or self.gamma == 0:
            return 0.0
        return -self.gamma * n_parents**self.exponent


def log_local_score(stats: SufficientStats, hyper: HyperParams) -> float:
    """Log marginal likelihood of one node's column given its parent configurations."""
    a, b = hyper.alpha, hyper.beta
    n = stats.counts.astype(float)
    z = stats.ones.astype(float)
    terms = (
        gammaln(a + b) - gammaln(a) - gammaln(b)
        + gammaln(a + z) + gammaln(b + n - z) - gammaln(a + b + n)
    )
    total = float(terms.sum())
    assert math.isfinite(total), "non-finite local score"
    return total


def fingerprint(data: BinaryDataset, hyper: HyperParams) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(data.fingerprint.encode())
    h.update(np.asarray([hyper.alpha, hyper.beta], dtype=np.float64).tobytes())
    return h.hexdigest()


class ScoreCache:
    """Memo of local scores keyed by ``(node, parent bitmask)`` for one (data, hyper) pair.

    Reads are lock-free; inserts take a lock. Two workers racing on the same
    key compute the same value, so the duplicate work is harmless.
    """

    def __init__(self, data: BinaryDataset, hyper: HyperParams) -> None:
        self.data = data
        self.hyper = hyper
        self.fingerprint = fingerprint(data, hyper)
        self._scores: dict[tuple[int, int], float] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._scores)

    def check(self, data: BinaryDataset, hyper: HyperParams) -> None:
        if data is self.data and hyper == self.hyper:
            return
        if fingerprint(data, hyper) != self.fingerprint:
            raise StaleCacheError("score cache was built for different data or hyperparameters")

    def local(self, node: int, parent_mask: int) -> float:
        key = (node, parent_mask)
        val = self._scores.get(key)
        if val is None:
            val = log_local_score(sufficient_stats(self.data, node, bits(parent_mask)), self.hyper)
            with self._lock:
                self._scores.setdefault(key, val)
        return val

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()


def _cache_for(data: BinaryDataset, hyper: HyperParams, cache: ScoreCache | None) -> ScoreCache:
    if cache is None:
        return ScoreCache(data, hyper)
    cache.check(data, hyper)
    return cache


def log_marginal_likelihood(
    dag: Dag, data: BinaryDataset, hyper: HyperParams, cache: ScoreCache | None = None
) -> float:
    if dag.d != data.d:
        raise ValueError(f"DAG has {dag.d} nodes but data has {data.d} columns")
    cache = _cache_for(data, hyper, cache)
    return sum(cache.local(i, r) for i, r in enumerate(dag.rows))


def log_prior(dag: Dag, prior: PriorSpec) -> float:
    return sum(prior.local(popcount(r)) for r in dag.rows)


def log_posterior_unnorm(
    dag: Dag,
    data: BinaryDataset,
    hyper: HyperParams,
    prior: PriorSpec,
    cache: ScoreCache | None = None,
) -> float:
    return log_marginal_likelihood(dag, data, hyper, cache) + log_prior(dag, prior)
