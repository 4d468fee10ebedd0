"""Deterministic seeded random streams.

Every stochastic construction in this package (density fields, power-iteration
and Lanczos start vectors, random test probes) draws from the counter-based
splitmix64 generator below, so a given seed produces the same values on any
platform and for any draw batching. NumPy's own Generator is deliberately not
used here: its bit streams are not part of this package's contract.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U53 = 2.0**-53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based splitmix64 stream.

    The n-th output is mix(seed + n * golden), which makes draws independent
    of how they are batched: ten calls of one draw equal one call of ten.
    """

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def next_u64(self, n: int) -> np.ndarray:
        ks = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + _GOLDEN * ks)

    def uniform01(self, n: int) -> np.ndarray:
        """n doubles in [0, 1) with 53 random bits each."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * _U53

    def uniform(self, n: int, lo: float, hi: float) -> np.ndarray:
        return lo + (hi - lo) * self.uniform01(n)

    def bernoulli(self, n: int, p: float) -> np.ndarray:
        return self.uniform01(n) < p

    def gaussian(self, n: int) -> np.ndarray:
        """n standard normal deviates via Box-Muller (pairwise, deterministic)."""
        m = (n + 1) // 2
        u1 = ((self.next_u64(m) >> np.uint64(11)).astype(np.float64) + 1.0) * _U53  # (0, 1]
        u2 = self.uniform01(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]


def gaussian_unit_vector(n: int, seed: int) -> np.ndarray:
    """Normalized Gaussian draw, the standard deterministic start vector."""
    v = SplitMix64(seed).gaussian(n)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:  # cannot happen for n >= 1 with this stream, but stay safe
        v[0] = 1.0
        nrm = 1.0
    return v / nrm
