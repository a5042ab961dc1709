"""Seeded, stream-labelled randomness.

Every random draw in the package is rooted in an :class:`RngContract`: a
(master seed, stream label, trial index) triple that maps to a counter-based
generator as a pure function.  Distinct labels give statistically independent
streams, and trial indices address independent streams within a label, so
trials can run in any order (or in parallel) and reproduce bit-identically.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np


def _label_digest(label: str) -> int:
    """Stable 64-bit digest of a stream label (never Python's salted hash)."""
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


@dataclass(frozen=True)
class RngContract:
    """Addressable randomness: (master_seed, label, index) -> byte stream."""

    master_seed: int
    label: str = "root"
    index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.index < 0:
            raise ValueError("index must be non-negative")

    def generator(self) -> np.random.Generator:
        """Fresh generator for this (seed, label, index) triple.

        Philox is counter-based: the key encodes (seed, label) and the
        counter encodes the trial index, so construction is cheap and any
        two distinct triples yield independent streams.
        """
        key = np.array([self.master_seed, _label_digest(self.label)], dtype=np.uint64)
        counter = np.array([0, 0, 0, self.index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def labeled(self, label: str) -> "RngContract":
        """Same seed, different stream label (appended as a path segment)."""
        return replace(self, label=f"{self.label}/{label}", index=0)

    def trial(self, index: int) -> "RngContract":
        return replace(self, index=index)

    def seed_record(self) -> dict:
        return {"master_seed": self.master_seed, "label": self.label, "index": self.index}
