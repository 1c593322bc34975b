"""Seedable MT19937 randomness with a fixed cross-platform draw discipline.

All stochastic choices in the package flow through `Rng` so that a run is
a pure function of (configuration, seed).  Bounded draws use rejection
sampling on raw 32-bit words, which keeps the stream identical no matter
the platform or word width.
"""

import numpy as np

from ._jit import jitted, jitted_inline

_N = 624
_M = 397
_MATRIX_A = 0x9908B0DF
_UPPER = 0x80000000
_LOWER = 0x7FFFFFFF
_MASK32 = 0xFFFFFFFF

# State layout: words 0..623, slot 624 holds the next output index.
_STATE_LEN = _N + 1


@jitted
def _mt_seed(state, seed):
    state[0] = seed & _MASK32
    for i in range(1, _N):
        state[i] = (1812433253 * (state[i - 1] ^ (state[i - 1] >> 30)) + i) & _MASK32
    state[_N] = _N


@jitted
def _mt_twist(state):
    # Standard in-place block regeneration, split to avoid index wrapping.
    for k in range(_N - _M):
        y = (state[k] & _UPPER) | (state[k + 1] & _LOWER)
        state[k] = state[k + _M] ^ (y >> 1) ^ ((y & 1) * _MATRIX_A)
    for k in range(_N - _M, _N - 1):
        y = (state[k] & _UPPER) | (state[k + 1] & _LOWER)
        state[k] = state[k + _M - _N] ^ (y >> 1) ^ ((y & 1) * _MATRIX_A)
    y = (state[_N - 1] & _UPPER) | (state[0] & _LOWER)
    state[_N - 1] = state[_M - 1] ^ (y >> 1) ^ ((y & 1) * _MATRIX_A)


@jitted_inline
def _mt_next(state):
    i = state[_N]
    if i >= _N:
        _mt_twist(state)
        i = 0
    y = state[i]
    state[_N] = i + 1
    y ^= y >> 11
    y = (y ^ ((y << 7) & 0x9D2C5680)) & _MASK32
    y = (y ^ ((y << 15) & 0xEFC60000)) & _MASK32
    y ^= y >> 18
    return y


@jitted_inline
def _uniform_below(state, bound):
    # Accept w mod bound only when w < 2^32 - (2^32 mod bound); the cutoff
    # is a multiple of bound, so accepted words are exactly uniform.
    limit = 4294967296 - (4294967296 % bound)
    while True:
        w = _mt_next(state)
        if w < limit:
            return w % bound


@jitted
def _uniform_below_many(state, bound, count, out):
    for i in range(count):
        out[i] = _uniform_below(state, bound)


@jitted
def _sample_distinct(state, k, start, length, out, offset):
    # Redraw on duplicates; intended for k far below length, where the
    # expected number of redraws is negligible.
    filled = 0
    while filled < k:
        v = start + _uniform_below(state, length)
        dup = False
        for j in range(filled):
            if out[offset + j] == v:
                dup = True
                break
        if not dup:
            out[offset + filled] = v
            filled += 1


class Rng:
    """MT19937 generator producing an unsigned 32-bit word stream.

    Instances are single-owner: concurrent trials must each hold their own
    generator (conventionally seeded ``seed_base + trial_index``).
    """

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK32:
            raise ValueError(f"seed must be an unsigned 32-bit integer, got {seed}")
        self.seed = seed
        self._state = np.zeros(_STATE_LEN, dtype=np.int64)
        _mt_seed(self._state, seed)

    def next_u32(self) -> int:
        """Next raw word in [0, 2^32)."""
        return int(_mt_next(self._state))

    def uniform_below(self, bound: int) -> int:
        """Uniform integer in [0, bound), by rejection on 32-bit words."""
        if bound < 1:
            raise ValueError(f"bound must be positive, got {bound}")
        return int(_uniform_below(self._state, bound))

    def sample_distinct(self, k: int, range_start: int, range_len: int) -> list[int]:
        """k distinct integers from [range_start, range_start + range_len).

        Values are returned in draw order; duplicates are rejected and
        redrawn, so the consumed word count varies but the result is a
        deterministic function of the stream position.
        """
        if k < 0:
            raise ValueError(f"k must be non-negative, got {k}")
        if k > range_len:
            raise ValueError(f"cannot draw {k} distinct values from a range of {range_len}")
        out = np.empty(max(k, 1), dtype=np.int64)
        _sample_distinct(self._state, k, range_start, range_len, out, 0)
        return [int(out[j]) for j in range(k)]

    def uniform_below_many(self, bound: int, count: int) -> np.ndarray:
        """Vector of `count` draws from uniform_below(bound)."""
        if bound < 1:
            raise ValueError(f"bound must be positive, got {bound}")
        out = np.empty(count, dtype=np.int64)
        _uniform_below_many(self._state, bound, count, out)
        return out

    def state_copy(self) -> np.ndarray:
        return self._state.copy()


def derive_seed(seed_base: int, index: int) -> int:
    """Per-trial seed convention: seed_base + trial index, wrapped to 32 bits."""
    return (seed_base + index) & _MASK32
