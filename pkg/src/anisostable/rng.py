"""Counter-based random number streams.

Every stochastic routine in the package takes an explicit :class:`RngHandle`.
A handle is a value (seed, stream_id); the generator behind it is Philox4x64,
keyed by the pair, so the sample sequence is a pure function of the handle.
Distinct stream ids give statistically independent streams and can be consumed
concurrently without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngHandle:
    """Value-type key for a reproducible random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if not (0 <= self.stream_id <= _MASK64):
            raise ValueError(f"stream_id must fit in 64 bits, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "RngHandle":
        """Handle for a parallel stream, e.g. one per Monte Carlo path."""
        return RngHandle(self.seed, (self.stream_id + offset) & _MASK64)
