# Salbench
# Copyright 2026 - The Salbench Authors

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1


def _words(data: bytes) -> list[int]:
    digest = hashlib.blake2b(data, digest_size=16).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, len(digest), 4)]


@dataclass(frozen=True)
class SeededRng:
    """Deterministic source of random streams.

    Every stream is a PCG64 generator seeded from (master_seed, image_id, purpose),
    so draws for one image never depend on which other images or metrics were
    evaluated before it, or on which worker evaluated it.
    """

    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ValueError(f"Seed must fit in 64 unsigned bits, got {self.master_seed}")

    def stream(self, image_id: str, purpose: str = "") -> np.random.Generator:
        entropy = [
            self.master_seed & 0xFFFFFFFF,
            self.master_seed >> 32,
            *_words(image_id.encode("utf-8")),
            *_words(purpose.encode("utf-8")),
        ]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
