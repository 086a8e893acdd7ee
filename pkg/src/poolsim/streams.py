"""Deterministic random-number streams for reproducible parallel ensembles.

A stream is identified by (master_seed, stream_index, tags).  Equal
identifiers always yield identical draw sequences; distinct identifiers
yield statistically independent sequences (numpy SeedSequence spawning).
Streams are cheap frozen values, so workers can derive their own without
any shared mutable state.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream"]


def _tag_to_int(tag) -> int:
    """Map an arbitrary tag (int or string) to a stable uint32."""
    if isinstance(tag, (bool,)):
        raise TypeError("boolean stream tags are ambiguous; use int or str")
    if isinstance(tag, (int, np.integer)):
        value = int(tag)
        if value < 0:
            raise ValueError(f"integer stream tag must be >= 0, got {value}")
        return value
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class RngStream:
    """Value identifying one reproducible random stream.

    ``generator()`` returns a fresh numpy Generator positioned at the start
    of the stream; calling it twice gives two identical sequences.
    """

    master_seed: int
    stream_index: int = 0
    tags: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & (2**64 - 1))
        object.__setattr__(self, "stream_index", _tag_to_int(self.stream_index))
        object.__setattr__(self, "tags", tuple(_tag_to_int(t) for t in self.tags))

    def substream(self, *tags) -> "RngStream":
        """Derive an independent child stream keyed by the extra tags."""
        return RngStream(self.master_seed, self.stream_index, self.tags + tags)

    def replica(self, index: int) -> "RngStream":
        """Stream for one ensemble replica, independent of scheduling order."""
        return RngStream(self.master_seed, self.stream_index, self.tags + ("replica", index))

    def _seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_index, *self.tags)
        )

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self._seed_sequence())

    def kernel_seed(self) -> int:
        """uint32 seed for compiled kernels that own their RNG state."""
        return int(self._seed_sequence().generate_state(1, np.uint32)[0])
