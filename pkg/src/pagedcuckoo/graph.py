"""Experiment configuration and random paged cuckoo graph generation.

A table of m cells (capacity ell each) is split into t = m/s pages of s
cells.  Every key draws a primary page with k_p distinct cells on it and,
when k_b > 0, a distinct backup page with k_b distinct cells.  Keys are
plain integers 0..n-1; there is no byte-string hashing layer.
"""

from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from ._jit import jitted
from .rng import Rng, _sample_distinct, _uniform_below


@dataclass(frozen=True)
class Config:
    """Table shape (c, m, s, k_p, k_b, ell).

    c is the load factor in keys per cell: n = round(c * m), ties rounding
    up.  Derived quantities: t = m / s pages, k = k_p + k_b choices.
    """

    c: float
    m: int
    s: int
    k_p: int
    k_b: int
    ell: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.s < 1 or self.m % self.s != 0:
            raise ValueError(f"page size {self.s} must divide cell count {self.m}")
        if self.k_p < 1:
            raise ValueError(f"k_p must be at least 1, got {self.k_p}")
        if self.k_b < 0:
            raise ValueError(f"k_b must be non-negative, got {self.k_b}")
        if self.k_p > self.s or self.k_b > self.s:
            raise ValueError(
                f"choices per page (k_p={self.k_p}, k_b={self.k_b}) cannot exceed page size {self.s}"
            )
        if self.k_b > 0 and self.t < 2:
            raise ValueError("a backup page requires at least two pages (t >= 2)")
        if self.ell < 1:
            raise ValueError(f"cell capacity must be at least 1, got {self.ell}")
        if self.c < 0:
            raise ValueError(f"load factor must be non-negative, got {self.c}")

    @property
    def t(self) -> int:
        return self.m // self.s

    @property
    def k(self) -> int:
        return self.k_p + self.k_b

    @property
    def n(self) -> int:
        return int(np.floor(self.c * self.m + 0.5))


@dataclass(frozen=True)
class KeyChoices:
    """One key's pages and cell choices (global cell indices)."""

    key: int
    primary_page: int
    backup_page: int | None
    primary_cells: tuple[int, ...]
    backup_cells: tuple[int, ...]

    @property
    def cells(self) -> tuple[int, ...]:
        return self.primary_cells + self.backup_cells


@jitted
def _generate(state, n, t, s, kp, kb, cells, pages):
    # Draw order per key is fixed: primary page, primary cells, backup
    # page (uniform over the other t-1 pages via index skip), backup cells.
    for x in range(n):
        p = _uniform_below(state, t)
        pages[x, 0] = p
        _sample_distinct(state, kp, p * s, s, cells[x], 0)
        if kb > 0:
            b = _uniform_below(state, t - 1)
            if b >= p:
                b += 1
            pages[x, 1] = b
            _sample_distinct(state, kb, b * s, s, cells[x], kp)
        else:
            pages[x, 1] = -1


class CuckooGraph:
    """n keys with their page and cell choices, stored columnar.

    `cells[x]` lists key x's k choices, primary cells first; `pages[x]` is
    (primary page, backup page or -1).  Instances are immutable once built
    and safe to share between threads.
    """

    def __init__(self, config: Config, cells: np.ndarray, pages: np.ndarray):
        self.config = config
        self.cells = cells
        self.pages = pages

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    def key(self, x: int) -> KeyChoices:
        kp = self.config.k_p
        row = self.cells[x]
        backup = int(self.pages[x, 1])
        return KeyChoices(
            key=x,
            primary_page=int(self.pages[x, 0]),
            backup_page=None if backup < 0 else backup,
            primary_cells=tuple(int(v) for v in row[:kp]),
            backup_cells=tuple(int(v) for v in row[kp:]),
        )

    def keys(self) -> Iterator[KeyChoices]:
        for x in range(self.n):
            yield self.key(x)


def generate(config: Config, rng: Rng) -> CuckooGraph:
    """Draw a random cuckoo graph; pure function of (config, rng seed/state)."""
    n = config.n
    cells = np.empty((n, config.k), dtype=np.int64)
    pages = np.empty((n, 2), dtype=np.int64)
    _generate(rng._state, n, config.t, config.s, config.k_p, config.k_b, cells, pages)
    return CuckooGraph(config, cells, pages)


def draw_choices(config: Config, rng: Rng, key: int) -> KeyChoices:
    """Draw one key's pages and cells, in the same order generate() uses."""
    cells = np.empty((1, config.k), dtype=np.int64)
    pages = np.empty((1, 2), dtype=np.int64)
    _generate(rng._state, 1, config.t, config.s, config.k_p, config.k_b, cells, pages)
    backup = int(pages[0, 1])
    return KeyChoices(
        key=key,
        primary_page=int(pages[0, 0]),
        backup_page=None if backup < 0 else backup,
        primary_cells=tuple(int(v) for v in cells[0, : config.k_p]),
        backup_cells=tuple(int(v) for v in cells[0, config.k_p :]),
    )


def page_of(cell: int, config: Config) -> int:
    """Page index holding a global cell index."""
    if not 0 <= cell < config.m:
        raise ValueError(f"cell {cell} outside table of {config.m} cells")
    return cell // config.s


def dump_graph(graph: CuckooGraph, fh: TextIO) -> None:
    """Write one line per key: `key p b cell1 ... cellk` (b = -1 if none)."""
    for x in range(graph.n):
        fields = [x, int(graph.pages[x, 0]), int(graph.pages[x, 1])]
        fields.extend(int(v) for v in graph.cells[x])
        fh.write(" ".join(str(v) for v in fields) + "\n")


def load_graph(config: Config, fh: TextIO) -> CuckooGraph:
    """Read the dump format back into a graph for the given config."""
    n = config.n
    cells = np.empty((n, config.k), dtype=np.int64)
    pages = np.empty((n, 2), dtype=np.int64)
    count = 0
    for line in fh:
        parts = line.split()
        if not parts:
            continue
        x = int(parts[0])
        pages[x, 0] = int(parts[1])
        pages[x, 1] = int(parts[2])
        row = [int(v) for v in parts[3:]]
        if len(row) != config.k:
            raise ValueError(f"key {x}: expected {config.k} cells, got {len(row)}")
        cells[x] = row
        count += 1
    if count != n:
        raise ValueError(f"expected {n} keys, read {count}")
    return CuckooGraph(config, cells, pages)
