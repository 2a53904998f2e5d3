"""SplitMix64-based deterministic random numbers for experiment ensembles.

The generator has a single 64-bit state advanced by the golden-ratio
increment 0x9E3779B97F4A7C15 and finalized with the standard two-round
mix (constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).  Outputs are
identical across platforms and processes for a given seed, which is what
makes sweep CSVs byte-reproducible.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform(self, n: int) -> np.ndarray:
        """n doubles in [0, 1) with 53-bit resolution.

        Vectorized: the state after i steps is seed + i*gamma mod 2^64, so
        a whole block of outputs is a pure function of the start state."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + np.uint64(0x9E3779B97F4A7C15) * steps
        self._state = (self._state + n * 0x9E3779B97F4A7C15) & _MASK
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(float) / float(1 << 53)

    def standard_normal(self, n: int) -> np.ndarray:
        """Box-Muller; pairs consume two uniforms each."""
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        u1 = np.maximum(u1, 1e-300)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.concatenate([r * np.cos(2.0 * math.pi * u2), r * np.sin(2.0 * math.pi * u2)])
        return out[:n]

    def complex_normal(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        re = self.standard_normal(n)
        im = self.standard_normal(n)
        return (re + 1j * im).reshape(shape)
