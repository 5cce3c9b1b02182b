"""Binary datasets, CSV ingestion and per-family sufficient statistics."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed or non-binary input data."""


@dataclass(frozen=True)
class BinaryDataset:
    """An ``n x d`` table of 0/1 observations with unique column names.

    ``cells`` is stored as a read-only ``uint8`` array; instances are
    immutable and safe to share between workers.
    """

    cells: np.ndarray
    names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells)
        if cells.ndim != 2:
            raise DatasetError("cells must be a 2-D array")
        n, d = cells.shape
        if n < 1:
            raise DatasetError("no observations")
        if d < 1:
            raise DatasetError("no variables")
        if not np.isin(cells, (0, 1)).all():
            r, c = map(int, np.argwhere(~np.isin(cells, (0, 1)))[0])
            raise DatasetError(f"non-binary value {cells[r, c]!r} at row {r + 1}, column {c + 1}")
        cells = np.ascontiguousarray(cells, dtype=np.uint8)
        cells.setflags(write=False)
        names = tuple(self.names) if self.names else tuple(f"X{j + 1}" for j in range(d))
        if len(names) != d:
            raise DatasetError(f"{len(names)} names for {d} columns")
        if any(not nm for nm in names):
            raise DatasetError("column names must be nonempty")
        if len(set(names)) != d:
            dup = sorted({nm for nm in names if names.count(nm) > 1})
            raise DatasetError(f"duplicate column names: {', '.join(dup)}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @property
    def d(self) -> int:
        return self.cells.shape[1]

    @cached_property
    def fingerprint(self) -> str:
        """64-bit content hash (hex) over shape and cell bytes."""
        h = hashlib.blake2b(digest_size=8)
        h.update(np.asarray(self.cells.shape, dtype=np.int64).tobytes())
        h.update(self.cells.tobytes())
        return h.hexdigest()

    def index_of(self, name_or_index: str | int) -> int:
        """Resolve a column name or a 0-based index string to an index."""
        if isinstance(name_or_index, (int, np.integer)):
            idx = int(name_or_index)
        elif name_or_index in self.names:
            return self.names.index(name_or_index)
        elif str(name_or_index).isdigit():
            idx = int(name_or_index)
        else:
            raise DatasetError(f"unknown column {name_or_index!r}")
        if not 0 <= idx < self.d:
            raise DatasetError(f"column index {idx} out of range for d={self.d}")
        return idx


@dataclass(frozen=True)
class ParentConfig:
    """An assignment of values to an ordered set of parent variables."""

    parent_set: tuple[int, ...]
    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.parent_set) != len(self.assignment):
            raise ValueError("assignment length must equal parent-set size")
        if any(b <= a for a, b in zip(self.parent_set, self.parent_set[1:])):
            raise ValueError("parent indices must be strictly increasing")
        if any(v not in (0, 1) for v in self.assignment):
            raise ValueError("assignment values must be 0 or 1")

    @property
    def index(self) -> int:
        """Configuration index: bit b holds the value of the b-th parent."""
        return sum(v << b for b, v in enumerate(self.assignment))

    @classmethod
    def from_index(cls, parent_set: Sequence[int], index: int) -> "ParentConfig":
        ps = tuple(parent_set)
        return cls(ps, tuple((index >> b) & 1 for b in range(len(ps))))

    def mask(self, data: BinaryDataset) -> np.ndarray:
        """Boolean row mask of the rows of ``data`` matching this configuration."""
        sel = np.ones(data.n, dtype=bool)
        for p, v in zip(self.parent_set, self.assignment):
            sel &= data.cells[:, p] == v
        return sel


@dataclass(frozen=True)
class SufficientStats:
    """Counts ``(n_j, z_j)`` for every configuration of ``parent_set``.

    Configuration ``j`` sets parent ``parent_set[b]`` to bit ``b`` of ``j``
    (lowest index is the least significant bit).
    """

    node: int
    parent_set: tuple[int, ...]
    counts: np.ndarray
    ones: np.ndarray

    @property
    def table(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.counts, self.ones)]


def config_index(cells: np.ndarray, parent_set: Sequence[int]) -> np.ndarray:
    """Per-row configuration index of ``parent_set`` (little-endian)."""
    idx = np.zeros(cells.shape[0], dtype=np.int64)
    for b, p in enumerate(parent_set):
        idx |= cells[:, p].astype(np.int64) << b
    return idx


def sufficient_stats(data: BinaryDataset, node: int, parent_set: Iterable[int]) -> SufficientStats:
    ps = tuple(sorted(set(int(p) for p in parent_set)))
    if node in ps:
        raise DatasetError(f"node {node} cannot be its own parent")
    for i in (node, *ps):
        if not 0 <= i < data.d:
            raise DatasetError(f"index {i} out of range for d={data.d}")
    size = 1 << len(ps)
    idx = config_index(data.cells, ps)
    counts = np.bincount(idx, minlength=size)
    ones = np.bincount(idx, weights=data.cells[:, node], minlength=size).astype(np.int64)
    return SufficientStats(node, ps, counts, ones)


def load_csv(path: str | Path) -> BinaryDataset:
    """Read a headed CSV of literal ``0``/``1`` cells."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file (header row required)") from None
        if any(not h for h in header):
            raise DatasetError(f"{path}: empty column name in header")
        seen = set()
        for h in header:
            if h in seen:
                raise DatasetError(f"{path}: duplicate column name {h!r}")
            seen.add(h)
        rows = []
        for r, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise DatasetError(f"{path}: row {r} has {len(raw)} cells, expected {len(header)}")
            row = []
            for c, cell in enumerate(raw):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise DatasetError(
                        f"{path}: non-binary cell {cell!r} at row {r}, column {header[c]!r}"
                    )
                row.append(cell == "1")
            rows.append(row)
    if not rows:
        raise DatasetError(f"{path}: no observations")
    return BinaryDataset(np.array(rows, dtype=np.uint8), tuple(header))


def write_csv(data: BinaryDataset, path: str | Path) -> None:
    lines = [",".join(data.names)]
    lines.extend(",".join("1" if v else "0" for v in row) for row in data.cells)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
