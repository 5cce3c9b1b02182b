"""Exact structure posterior by enumeration for small ``d``."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .dag import MAX_ENUMERATE, Dag, DagError, EquivalenceKey, enumerate_dags
from .dataset import BinaryDataset
from .score import HyperParams, PriorSpec, ScoreCache, _cache_for, log_marginal_likelihood, log_prior


@dataclass
class ExactPosterior:
    d: int
    max_parents: int
    entries: dict[str, float]
    by_class: dict[EquivalenceKey, float]
    log_normalizer: float
    log_weights: dict[str, float]
    classes: dict[str, EquivalenceKey]

    def dag(self, code: str) -> Dag:
        return Dag.decode(code, self.d)

    def ranked(self) -> list[tuple[str, float]]:
        """Entries by decreasing probability, ties broken by encoding."""
        return sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))

    def top(self) -> Dag:
        return self.dag(self.ranked()[0][0])

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "max_parents": self.max_parents,
            "log_normalizer": self.log_normalizer,
            "entries": [
                {
                    "dag": code,
                    "probability": p,
                    "log_weight": self.log_weights[code],
                    "class": str(self.classes[code]),
                }
                for code, p in self.ranked()
            ],
            "classes": [
                {"class": str(k), "probability": p}
                for k, p in sorted(self.by_class.items(), key=lambda kv: (-kv[1], str(kv[0])))
            ],
        }


def exact_posterior(
    data: BinaryDataset,
    hyper: HyperParams,
    prior: PriorSpec,
    max_parents: int | None = None,
    cache: ScoreCache | None = None,
) -> ExactPosterior:
    d = data.d
    if d > MAX_ENUMERATE:
        raise DagError(f"exact posterior is limited to d <= {MAX_ENUMERATE}; use the MCMC sampler")
    k = d - 1 if max_parents is None else min(max_parents, d - 1)
    cache = _cache_for(data, hyper, cache)
    codes, logw, keys = [], [], {}
    for g in enumerate_dags(d, k):
        code = g.encode()
        codes.append(code)
        logw.append(log_marginal_likelihood(g, data, hyper, cache) + log_prior(g, prior))
        keys[code] = g.equivalence_key()
    lw = np.asarray(logw)
    log_z = float(logsumexp(lw))
    probs = np.exp(lw - log_z)
    entries = dict(zip(codes, (float(p) for p in probs)))
    by_class: dict[EquivalenceKey, float] = defaultdict(float)
    for code, p in entries.items():
        by_class[keys[code]] += p
    return ExactPosterior(
        d=d,
        max_parents=k,
        entries=entries,
        by_class=dict(by_class),
        log_normalizer=log_z,
        log_weights=dict(zip(codes, (float(w) for w in lw))),
        classes=keys,
    )


class TotalVariation(NamedTuple):
    dag: float
    cls: float


def total_variation(samples: Sequence[Dag], exact: ExactPosterior) -> TotalVariation:
    """Half the L1 distance between sample frequencies and the exact posterior."""
    if not samples:
        raise ValueError("empty sample")
    counts = Counter()
    for g in samples:
        if g.d != exact.d:
            raise ValueError("sample DAG dimension does not match the posterior")
        if g.max_in_degree > exact.max_parents:
            raise ValueError(f"sample DAG {g.encode()} exceeds the in-degree cap {exact.max_parents}")
        counts[g.encode()] += 1
    total = len(samples)
    tv = 0.5 * sum(abs(counts.get(c, 0) / total - p) for c, p in exact.entries.items())
    cls_freq: dict[EquivalenceKey, float] = defaultdict(float)
    for c, n in counts.items():
        cls_freq[exact.classes[c]] += n / total
    tv_cls = 0.5 * sum(abs(cls_freq.get(k, 0.0) - p) for k, p in exact.by_class.items())
    return TotalVariation(float(tv), float(tv_cls))


class TruthPosterior(NamedTuple):
    probability: float
    rank: int
    class_probability: float


def true_network_posterior(exact: ExactPosterior, truth: Dag) -> TruthPosterior:
    if truth.d != exact.d:
        raise ValueError(f"truth has {truth.d} nodes, posterior has {exact.d}")
    if truth.max_in_degree > exact.max_parents:
        raise ValueError("true network exceeds the in-degree cap of the posterior")
    code = truth.encode()
    rank = 1 + [c for c, _ in exact.ranked()].index(code)
    return TruthPosterior(exact.entries[code], rank, exact.by_class[truth.equivalence_key()])
