"""DAGs over binary nodes stored as per-node parent bitmasks.

Row ``i`` of the adjacency matrix lists the parents of node ``i``; it is
held as an integer whose bit ``j`` is set when ``X_j -> X_i``.

Hex encoding: the integer ``sum(A[i][j] << (i * d + j))`` rendered as
lowercase hexadecimal, zero-padded to ``ceil(d*d / 4)`` digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_NODES = 32
MAX_ENUMERATE = 5


class DagError(ValueError):
    """Raised for self-loops, cycles or malformed encodings."""


def popcount(x: int) -> int:
    return bin(x).count("1")


def bits(x: int) -> tuple[int, ...]:
    out = []
    j = 0
    while x:
        if x & 1:
            out.append(j)
        x >>= 1
        j += 1
    return tuple(out)


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for j in indices:
        m |= 1 << int(j)
    return m


def descendants(rows: Sequence[int], node: int) -> int:
    """Bitmask of nodes reachable from ``node`` along parent->child edges, ``node`` included."""
    d = len(rows)
    seen = 1 << node
    frontier = [node]
    while frontier:
        v = frontier.pop()
        bit = 1 << v
        for i in range(d):
            if rows[i] & bit and not seen >> i & 1:
                seen |= 1 << i
                frontier.append(i)
    return seen


def _rows_acyclic(rows: Sequence[int]) -> bool:
    d = len(rows)
    placed = 0
    remaining = (1 << d) - 1
    while remaining:
        progress = False
        for i in range(d):
            if remaining >> i & 1 and rows[i] & ~placed == 0:
                placed |= 1 << i
                remaining &= ~(1 << i)
                progress = True
        if not progress:
            return False
    return True


def is_acyclic(adjacency) -> bool:
    """True iff the square 0/1 matrix has a topological order.

    Entry ``(i, j) = 1`` means ``X_j`` is a parent of ``X_i``.
    """
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DagError("adjacency must be a square matrix")
    if np.any(np.diag(a) != 0):
        raise DagError("self-loop on the diagonal")
    rows = [mask_of(np.flatnonzero(a[i])) for i in range(a.shape[0])]
    return _rows_acyclic(rows)


@dataclass(frozen=True)
class EquivalenceKey:
    """Skeleton plus v-structures; equal keys mean Markov-equivalent DAGs.

    ``skeleton`` holds undirected edges ``(a, b)`` with ``a < b``;
    ``v_structures`` holds ``(a, c, b)`` for ``a -> c <- b`` with ``a < b``
    and ``a``, ``b`` non-adjacent.
    """

    skeleton: frozenset
    v_structures: frozenset

    def permute(self, perm: Sequence[int]) -> "EquivalenceKey":
        sk = frozenset(tuple(sorted((perm[a], perm[b]))) for a, b in self.skeleton)
        vs = set()
        for a, c, b in self.v_structures:
            x, y = sorted((perm[a], perm[b]))
            vs.add((x, perm[c], y))
        return EquivalenceKey(sk, frozenset(vs))

    def __str__(self) -> str:
        sk = ",".join(f"{a}-{b}" for a, b in sorted(self.skeleton))
        vs = ",".join(f"{a}>{c}<{b}" for a, c, b in sorted(self.v_structures))
        return f"S[{sk}]V[{vs}]"

    def __lt__(self, other: "EquivalenceKey") -> bool:
        return (sorted(self.skeleton), sorted(self.v_structures)) < (
            sorted(other.skeleton),
            sorted(other.v_structures),
        )


@dataclass(frozen=True)
class Dag:
    d: int
    rows: tuple[int, ...]

    def __post_init__(self) -> None:
        rows = tuple(int(r) for r in self.rows)
        if not 1 <= self.d <= MAX_NODES:
            raise DagError(f"d must be in 1..{MAX_NODES}, got {self.d}")
        if len(rows) != self.d:
            raise DagError(f"{len(rows)} rows for d={self.d}")
        full = (1 << self.d) - 1
        for i, r in enumerate(rows):
            if r < 0 or r & ~full:
                raise DagError(f"row {i} references a node outside 0..{self.d - 1}")
            if r >> i & 1:
                raise DagError(f"self-loop at node {i}")
        if not _rows_acyclic(rows):
            raise DagError("graph contains a directed cycle")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def _trusted(cls, rows: Sequence[int]) -> "Dag":
        # Skips validation; callers guarantee acyclicity.
        obj = object.__new__(cls)
        object.__setattr__(obj, "d", len(rows))
        object.__setattr__(obj, "rows", tuple(rows))
        return obj

    @classmethod
    def empty(cls, d: int) -> "Dag":
        return cls(d, (0,) * d)

    @classmethod
    def from_edges(cls, d: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        """Build from ``(parent, child)`` pairs."""
        rows = [0] * d
        for p, c in edges:
            rows[c] |= 1 << p
        return cls(d, tuple(rows))

    @classmethod
    def from_parents(cls, parents: Sequence[Iterable[int]]) -> "Dag":
        return cls(len(parents), tuple(mask_of(p) for p in parents))

    @classmethod
    def from_adjacency(cls, adjacency) -> "Dag":
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DagError("adjacency must be a square matrix")
        if not np.isin(a, (0, 1)).all():
            raise DagError("adjacency entries must be 0 or 1")
        return cls(a.shape[0], tuple(mask_of(np.flatnonzero(a[i])) for i in range(a.shape[0])))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.d, self.d), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in bits(r):
                a[i, j] = 1
        return a

    def parents(self, node: int) -> tuple[int, ...]:
        return bits(self.rows[node])

    def children(self, node: int) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.rows) if r >> node & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c in range(self.d) for p in bits(self.rows[c])]

    @property
    def n_edges(self) -> int:
        return sum(popcount(r) for r in self.rows)

    @property
    def max_in_degree(self) -> int:
        return max(popcount(r) for r in self.rows)

    def with_row(self, node: int, parents: Iterable[int]) -> "Dag":
        rows = list(self.rows)
        rows[node] = mask_of(parents)
        return Dag(self.d, tuple(rows))

    def topological_order(self) -> list[int]:
        """Kahn's algorithm, always taking the lowest-index available node."""
        order: list[int] = []
        placed = 0
        while len(order) < self.d:
            for i in range(self.d):
                if not placed >> i & 1 and self.rows[i] & ~placed == 0:
                    order.append(i)
                    placed |= 1 << i
                    break
        return order

    def permute(self, perm: Sequence[int]) -> "Dag":
        """Relabel node ``i`` as ``perm[i]``."""
        rows = [0] * self.d
        for i, r in enumerate(self.rows):
            rows[perm[i]] = mask_of(perm[j] for j in bits(r))
        return Dag(self.d, tuple(rows))

    def encode(self) -> str:
        value = 0
        for i, r in enumerate(self.rows):
            value |= r << (i * self.d)
        width = max(1, math.ceil(self.d * self.d / 4))
        return format(value, f"0{width}x")

    @classmethod
    def decode(cls, text: str, d: int) -> "Dag":
        width = max(1, math.ceil(d * d / 4))
        if len(text) != width:
            raise DagError(f"encoding {text!r} has {len(text)} digits, expected {width} for d={d}")
        try:
            value = int(text, 16)
        except ValueError:
            raise DagError(f"malformed hex encoding {text!r}") from None
        if value >> (d * d):
            raise DagError(f"encoding {text!r} sets bits beyond a {d}x{d} matrix")
        row_mask = (1 << d) - 1
        return cls(d, tuple((value >> (i * d)) & row_mask for i in range(d)))

    def equivalence_key(self) -> EquivalenceKey:
        skeleton = set()
        for p, c in self.edges():
            skeleton.add((min(p, c), max(p, c)))
        vs = set()
        for c in range(self.d):
            for a, b in combinations(bits(self.rows[c]), 2):
                if (a, b) not in skeleton:
                    vs.add((a, c, b))
        return EquivalenceKey(frozenset(skeleton), frozenset(vs))

    def __str__(self) -> str:
        parts = []
        for i in range(self.d):
            ps = self.parents(i)
            parts.append(f"X{i}|{','.join(f'X{p}' for p in ps)}" if ps else f"X{i}")
        return " ".join(parts)


def topological_order(dag: Dag) -> list[int]:
    return dag.topological_order()


def equivalence_key(dag: Dag) -> EquivalenceKey:
    return dag.equivalence_key()


def encode(dag: Dag) -> str:
    return dag.encode()


def decode(text: str, d: int) -> Dag:
    return Dag.decode(text, d)


@lru_cache(maxsize=None)
def candidate_parent_masks(d: int, node: int, max_parents: int) -> tuple[int, ...]:
    """All parent sets of ``node`` with at most ``max_parents`` members, by size then lexicographically."""
    others = [j for j in range(d) if j != node]
    out = []
    for size in range(min(max_parents, d - 1) + 1):
        out.extend(mask_of(c) for c in combinations(others, size))
    return tuple(out)


def enumerate_dags(d: int, max_parents: int | None = None) -> Iterator[Dag]:
    """Yield every DAG on ``d`` nodes with in-degree at most ``max_parents`` exactly once."""
    if d < 1:
        raise DagError("d must be at least 1")
    if d > MAX_ENUMERATE:
        raise DagError(
            f"enumeration is limited to d <= {MAX_ENUMERATE} ({count_dags(d):,} DAGs at d={d}); "
            "use the MCMC sampler instead"
        )
    k = d - 1 if max_parents is None else max_parents
    if not 0 <= k <= d - 1:
        raise DagError(f"max_parents must be in 0..{d - 1}")
    rows = [0] * d
    cands = [candidate_parent_masks(d, i, k) for i in range(d)]

    # Rows are filled in index order; unfilled rows are empty, so a cycle
    # through node i exists iff a chosen parent is already a descendant of i.
    def fill(i: int) -> Iterator[Dag]:
        if i == d:
            yield Dag._trusted(rows)
            return
        blocked = descendants(rows, i)
        for m in cands[i]:
            if m & blocked:
                continue
            rows[i] = m
            yield from fill(i + 1)
        rows[i] = 0

    yield from fill(0)


def count_dags(d: int) -> int:
    """Number of labelled DAGs on ``d`` nodes (Robinson's recurrence, exact integers)."""
    if d < 1:
        raise ValueError(f"d must be at least 1, got {d}")
    return _robinson(d)


@lru_cache(maxsize=None)
def _robinson(d: int) -> int:
    if d == 0:
        return 1
    return sum(
        (-1) ** (k + 1) * math.comb(d, k) * 2 ** (k * (d - k)) * _robinson(d - k)
        for k in range(1, d + 1)
    )
