"""Per-page Bloom filters for the keys displaced to their backup page.

One filter per page, sized in bits per page cell.  A key's h bit indices
come from a short generator stream seeded by (filter seed, page, key), so
membership is checkable for arbitrary keys and independent of the cell
choice hashing.  False negatives are impossible by construction.
"""

import numpy as np

from ._jit import jitted
from .rng import _STATE_LEN, _mt_seed, _uniform_below

_MIX_PAGE = 0x9E3779B9
_MIX_KEY = 0x85EBCA6B


@jitted
def _fill_indices(state, seed, page, key, nbits, out, h):
    mixed = (seed + _MIX_PAGE * (page + 1) + _MIX_KEY * (key + 1)) & 0xFFFFFFFF
    _mt_seed(state, mixed)
    for i in range(h):
        out[i] = _uniform_below(state, nbits)


class PageFilters:
    """t Bloom filters of nbits bits each, h hash functions."""

    def __init__(self, t: int, nbits: int, hash_count: int, seed: int = 0):
        if nbits < 1 or hash_count < 1:
            raise ValueError("filters need at least one bit and one hash")
        self.t = t
        self.nbits = nbits
        self.hash_count = hash_count
        self.seed = seed
        self.bits = np.zeros((t, nbits), dtype=bool)
        self._state = np.zeros(_STATE_LEN, dtype=np.int64)
        self._idx = np.empty(hash_count, dtype=np.int64)

    def _indices(self, page: int, key: int) -> np.ndarray:
        _fill_indices(self._state, self.seed, page, key, self.nbits, self._idx, self.hash_count)
        return self._idx

    def add(self, page: int, key: int) -> None:
        self.bits[page, self._indices(page, key)] = True

    def query(self, page: int, key: int) -> bool:
        return bool(self.bits[page, self._indices(page, key)].all())

    def fraction_set(self, page: int) -> float:
        return float(np.count_nonzero(self.bits[page])) / self.nbits
