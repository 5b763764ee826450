"""Decaying dissemination thresholds and stimulus application.

A threshold sits at its base value until a stimulus arrives. A stimulus
adds ``sigma`` to the current (possibly partially decayed) value, capped at
1, after which the value falls linearly back to the base over ``delta``
steps measured from the latest stimulus.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Hashable


class Keying(Enum):
    RECEIVER = "receiver"
    SOURCE = "source"
    SOURCE_RECEIVER = "source_receiver"


@dataclass
class ThresholdState:
    base: float
    sigma: float
    delta: float
    level_at_last_stim: float | None = None
    last_stim_time: int | None = None

    def __post_init__(self):
        if self.level_at_last_stim is None:
            self.level_at_last_stim = self.base


def compute_threshold(s: ThresholdState, t: int) -> float:
    last = s.last_stim_time
    if last is None or t >= last + s.delta:
        return s.base
    return s.base + (s.level_at_last_stim - s.base) * (1.0 - (t - last) / s.delta)


def apply_stimulus(s: ThresholdState, t: int) -> ThresholdState:
    """Add ``sigma`` to the value at ``t`` (capped at 1) and restart the decay. Mutates ``s``."""
    s.level_at_last_stim = min(1.0, compute_threshold(s, t) + s.sigma)
    s.last_stim_time = t
    return s


class ThresholdTable:
    """Lazily populated map from key to :class:`ThresholdState`.

    What the key means is fixed by ``keying``: a neighbor id (``RECEIVER``),
    a generator id (``SOURCE``) or a ``(generator, neighbor)`` pair
    (``SOURCE_RECEIVER``). Absent keys read as the base value.
    """

    def __init__(self, keying: Keying, base: float, sigma: float, delta: float):
        if not 0.0 < base <= 1.0:
            raise ValueError(f"base probability must be in (0, 1], got {base}")
        self.keying = keying
        self.base = base
        self.sigma = sigma
        self.delta = delta
        self.entries: dict[Hashable, ThresholdState] = {}

    def value(self, key: Hashable, t: int) -> float:
        s = self.entries.get(key)
        if s is None:
            return self.base
        return compute_threshold(s, t)

    def stimulate(self, key: Hashable, t: int) -> ThresholdState:
        s = self.entries.get(key)
        if s is None:
            s = self.entries[key] = ThresholdState(self.base, self.sigma, self.delta)
        return apply_stimulus(s, t)

    def stimulus_key(self, requester: int, about_source: int) -> Hashable:
        if self.keying is Keying.RECEIVER:
            return requester
        if self.keying is Keying.SOURCE:
            return about_source
        return (about_source, requester)
