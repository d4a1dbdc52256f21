"""Counter-based random streams.

A draw is a pure function of ``(seed, stream, event index)``: the SplitMix64
finalizer applied to a Weyl sequence keyed by the seed and stream. Any event
can be regenerated on its own, so ensembles can be cut into chunks, computed
anywhere, and merged without changing a single draw.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@dataclass(frozen=True)
class CounterRNG:
    """Seeded, splittable generator with random access by event index."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def key(self) -> int:
        return _mix64(_mix64(self.seed) + (self.stream + 1) * _GOLDEN)

    def substream(self, k: int) -> "CounterRNG":
        """Independent child stream ``k``."""
        return CounterRNG(self.seed, (self.stream * 1_000_003 + k + 1) & _MASK)

    def uniforms(self, n: int, start: int = 0) -> np.ndarray:
        return kernels.uniforms(self.key, start, n)

    def uniform_at(self, index: int) -> float:
        return float(kernels.uniforms(self.key, index, 1)[0])


def as_rng(rng) -> CounterRNG:
    """Accept a ``CounterRNG`` or an integer seed."""
    if isinstance(rng, CounterRNG):
        return rng
    if isinstance(rng, (int, np.integer)):
        return CounterRNG(int(rng))
    raise TypeError(f"expected CounterRNG or int seed, got {type(rng).__name__}")


def cdf_from_probabilities(probs) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=np.float64), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("probabilities sum to zero")
    cdf = np.cumsum(p) / total
    cdf[-1] = 1.0
    return cdf


def draw_categorical(rng: CounterRNG, probs, n: int, start: int = 0) -> np.ndarray:
    """``n`` category indices for events ``start .. start+n-1``."""
    return kernels.sample_categorical(rng.uniforms(n, start), cdf_from_probabilities(probs))
