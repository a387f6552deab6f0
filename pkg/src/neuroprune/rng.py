"""Reproducible random streams.

Every stream is a Philox-4x64 counter-based generator keyed by the pair
``(seed, stream_id)``.  Philox output depends only on the key and the
counter, so a given pair replays the same draws on any platform running
the same numpy release.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _U64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Stream for sub-task ``index``; distinct indices never collide with the parent."""
        return RngStream(self.seed, (self.stream_id * 1_000_003 + 1 + int(index)) & _U64)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream or an existing Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
