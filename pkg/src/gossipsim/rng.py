"""Per-(run, node, purpose) random streams.

The compiled engine cannot share ``random.Random`` state, so both engines
draw from SplitMix64 streams whose 64-bit seeds come from
``numpy.random.SeedSequence``. The compiled kernel reimplements ``_next``
bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

GENERATION, FORWARDING, FORWARDER_SELECTION = 0, 1, 2


def stream_seed(run_seed: int, node: int, purpose: int) -> int:
    ss = np.random.SeedSequence(entropy=run_seed & MASK, spawn_key=(node, purpose))
    return int(ss.generate_state(1, np.uint64)[0])


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK

    def _next(self) -> int:
        self.state = z = (self.state + GOLDEN) & MASK
        z = ((z ^ (z >> 30)) * MIX1) & MASK
        z = ((z ^ (z >> 27)) * MIX2) & MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self._next() >> 11) * 1.1102230246251565e-16

    def randrange(self, k: int) -> int:
        return int(self.random() * k)

    def expovariate(self, lambd: float) -> float:
        return -math.log(1.0 - self.random()) / lambd


def stream(run_seed: int, node: int, purpose: int) -> SplitMix64:
    return SplitMix64(stream_seed(run_seed, node, purpose))
