"""Push-gossip dissemination policies as per-peer state machines.

Every forwarding function walks the peer's neighbors in ascending id order
and consumes exactly one uniform draw per considered neighbor (probabilistic
broadcast instead uses one gate draw per relayed message). A peer holding a
copy with ``ttl == 0`` never forwards it; forwarded copies carry
``ttl - 1`` and ``hops + 1``.
"""

from __future__ import annotations

import random
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

from .monitoring import ReceptionStats, StimulusMessage, monitor_tick
from .stimulus import Keying, ThresholdTable


class Message(NamedTuple):
    msg_id: int
    source: int
    creation_time: int
    ttl: int
    hops: int = 0

    def relayed(self) -> "Message":
        return Message(self.msg_id, self.source, self.creation_time, self.ttl - 1, self.hops + 1)


class Verdict(Enum):
    FIRST_COPY = "first"
    DUPLICATE = "duplicate"


class LRUCache:
    """Fixed-capacity set of message ids; lookups refresh recency."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("cache capacity must be positive")
        self.capacity = capacity
        self._items: OrderedDict[int, None] = OrderedDict()

    def __len__(self):
        return len(self._items)

    def __contains__(self, key):
        return key in self._items

    def touch(self, key: int) -> bool:
        """Insert or refresh ``key``; return whether it was already present."""
        items = self._items
        if key in items:
            items.move_to_end(key)
            return True
        items[key] = None
        if len(items) > self.capacity:
            items.popitem(last=False)
        return False

    def keys(self) -> list[int]:
        """Ids from least to most recently used."""
        return list(self._items)


@dataclass
class PeerState:
    node_id: int
    neighbors: tuple[int, ...]
    cache: LRUCache
    rng: random.Random
    select_rng: random.Random
    thresholds: ThresholdTable | None = None
    stats: ReceptionStats = field(default_factory=ReceptionStats)


def accept_or_drop(p: PeerState, msg: Message) -> Verdict:
    return Verdict.DUPLICATE if p.cache.touch(msg.msg_id) else Verdict.FIRST_COPY


Transmission = tuple  # (neighbor, Message | StimulusMessage)


def fixed_probability_forward(p: PeerState, msg: Message, frm: int | None, v0: float) -> list[Transmission]:
    if msg.ttl <= 0:
        return []
    out_msg = msg.relayed()
    draw = p.rng.random
    return [(n, out_msg) for n in p.neighbors if n != frm and draw() < v0]


def probabilistic_broadcast_forward(p: PeerState, msg: Message, frm: int | None, v0: float) -> list[Transmission]:
    if msg.ttl <= 0:
        return []
    if msg.source != p.node_id and not p.rng.random() < v0:
        return []
    out_msg = msg.relayed()
    return [(n, out_msg) for n in p.neighbors if n != frm]


def adaptive1_forward(p: PeerState, msg: Message, frm: int | None, t: int) -> list[Transmission]:
    """Per-neighbor threshold keyed by the receiving neighbor."""
    if msg.ttl <= 0:
        return []
    out_msg = msg.relayed()
    draw = p.rng.random
    value = p.thresholds.value
    return [(n, out_msg) for n in p.neighbors if n != frm and draw() < value(n, t)]


def adaptive2_forward(p: PeerState, msg: Message, frm: int | None, t: int) -> list[Transmission]:
    """One threshold for the message's generator, shared by every neighbor."""
    if msg.ttl <= 0:
        return []
    gamma = p.thresholds.value(msg.source, t)
    out_msg = msg.relayed()
    draw = p.rng.random
    return [(n, out_msg) for n in p.neighbors if n != frm and draw() < gamma]


def adaptive3_forward(p: PeerState, msg: Message, frm: int | None, t: int) -> list[Transmission]:
    """Threshold per (generator, receiving neighbor) pair."""
    if msg.ttl <= 0:
        return []
    s = msg.source
    out_msg = msg.relayed()
    draw = p.rng.random
    value = p.thresholds.value
    return [(n, out_msg) for n in p.neighbors if n != frm and draw() < value((s, n), t)]


class DisseminationPolicy:
    """Hooks the simulation loop calls on a peer; each returns transmissions.

    Duplicate suppression happens in the engine before ``on_receive``.
    """

    name = ""
    monitors = False
    keying: Keying | None = None

    def __init__(self, v0: float):
        if not 0.0 < v0 <= 1.0:
            raise ValueError(f"v0 must be in (0, 1], got {v0}")
        self.v0 = v0

    def forward(self, p: PeerState, msg: Message, frm: int | None, t: int) -> list[Transmission]:
        raise NotImplementedError

    def new_thresholds(self) -> ThresholdTable | None:
        return None

    def on_local_event(self, p: PeerState, msg: Message, t: int) -> list[Transmission]:
        return self.forward(p, msg, None, t)

    def on_receive(self, p: PeerState, msg: Message, frm: int, t: int) -> list[Transmission]:
        return self.forward(p, msg, frm, t)

    def on_stimulus(self, p: PeerState, stim: StimulusMessage, t: int) -> list[Transmission]:
        return []

    def on_monitor_tick(self, p: PeerState, t: int) -> list[Transmission]:
        return []


class FixedProbability(DisseminationPolicy):
    name = "fixed-prob"

    def forward(self, p, msg, frm, t):
        return fixed_probability_forward(p, msg, frm, self.v0)


class ProbabilisticBroadcast(DisseminationPolicy):
    name = "prob-bcast"

    def forward(self, p, msg, frm, t):
        return probabilistic_broadcast_forward(p, msg, frm, self.v0)


class AdaptivePolicy(DisseminationPolicy):
    monitors = True

    def __init__(self, v0: float, sigma: float, delta: float, alpha: float, t_mon: int,
                 rates: Sequence[float] | dict[int, float]):
        super().__init__(v0)
        if t_mon < 1 or alpha < 0 or sigma < 0 or delta < 0:
            raise ValueError("need t_mon >= 1 and non-negative alpha, sigma, delta")
        self.sigma = sigma
        self.delta = delta
        self.alpha = alpha
        self.t_mon = t_mon
        self.rates = rates

    def new_thresholds(self):
        return ThresholdTable(self.keying, self.v0, self.sigma, self.delta)

    def on_stimulus(self, p, stim, t):
        table = p.thresholds
        table.stimulate(table.stimulus_key(stim.requester, stim.about_source), t)
        return []

    def on_monitor_tick(self, p, t):
        return monitor_tick(p.stats, p.node_id, p.neighbors, self.rates, self.alpha, self.t_mon, t, p.select_rng)


class Adaptive1(AdaptivePolicy):
    name = "adaptive1"
    keying = Keying.RECEIVER

    def forward(self, p, msg, frm, t):
        return adaptive1_forward(p, msg, frm, t)


class Adaptive2(AdaptivePolicy):
    name = "adaptive2"
    keying = Keying.SOURCE

    def forward(self, p, msg, frm, t):
        return adaptive2_forward(p, msg, frm, t)


class Adaptive3(AdaptivePolicy):
    name = "adaptive3"
    keying = Keying.SOURCE_RECEIVER

    def forward(self, p, msg, frm, t):
        return adaptive3_forward(p, msg, frm, t)


POLICIES: dict[str, type[DisseminationPolicy]] = {
    cls.name: cls for cls in (FixedProbability, ProbabilisticBroadcast, Adaptive1, Adaptive2, Adaptive3)
}


def make_policy(name: str, v0: float, sigma: float = 0.0, delta: float = 0.0, alpha: float = 0.0,
                t_mon: int = 1, rates=()) -> DisseminationPolicy:
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None
    if issubclass(cls, AdaptivePolicy):
        return cls(v0, sigma, delta, alpha, t_mon, rates)
    return cls(v0)
