"""Time-stepped discrete-event core for a single simulation run.

Every transmission, data or stimulus, takes exactly one step. Events that
share a step fire in kind order (deliveries, stimulus deliveries,
generations, monitor ticks) and, within a kind, in the order they were
scheduled. Because nothing is ever scheduled for the current step, a
per-step calendar of FIFO lists realises that ordering without a heap.

Two engines share these semantics. ``run_reference`` drives the policy
objects from :mod:`gossipsim.protocol` one event at a time; the default
engine is a compiled loop over flat arrays. Both consume the same random
streams in the same order and produce identical traces.
"""

from __future__ import annotations

import heapq
import io
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from typing import Iterator, NamedTuple

import numpy as np

from .monitoring import low_rate_bound, record_reception
from .protocol import POLICIES, LRUCache, Message, PeerState, make_policy
from .rng import FORWARDER_SELECTION, FORWARDING, GENERATION, stream, stream_seed
from .topology import Graph, diameter


class EventKind(IntEnum):
    DELIVER = 0
    DELIVER_STIMULUS = 1
    GENERATE = 2
    MONITOR_TICK = 3


class ScheduledEvent(NamedTuple):
    fire_time: int
    kind: EventKind
    seq: int
    payload: object


class EventCalendar:
    """Pending events bucketed by step, one FIFO list per kind."""

    def __init__(self):
        self._slots: dict[int, list[list]] = {}

    def slot(self, t: int) -> list[list]:
        s = self._slots.get(t)
        if s is None:
            s = self._slots[t] = [[], [], [], []]
        return s

    def schedule(self, t: int, kind: EventKind, payload) -> None:
        self.slot(t)[kind].append(payload)

    def pop(self, t: int) -> list[list] | None:
        return self._slots.pop(t, None)

    def __len__(self):
        return sum(len(lst) for s in self._slots.values() for lst in s)

    def drain(self) -> Iterator[ScheduledEvent]:
        """Remove and yield every pending event in firing order."""
        seq = 0
        for t in sorted(self._slots):
            for kind, items in zip(EventKind, self._slots.pop(t)):
                for payload in items:
                    yield ScheduledEvent(t, kind, seq, payload)
                    seq += 1


@dataclass
class SimConfig:
    policy: str = "fixed-prob"
    v0: float = 0.5
    sigma: float = 0.0
    delta: float = 0.0
    alpha: float = 0.0
    t_mon: int = 100
    steps: int = 5000
    n: int = 100
    edges_per_node: int = 2
    ttl_init: int = 8
    cache_capacity: int = 256
    mean_intergen: float = 200.0
    run_seed: int = 0

    @property
    def rate(self) -> float:
        return 1.0 / self.mean_intergen

    def validate(self, g: Graph | None = None) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {sorted(POLICIES)}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 < self.v0 <= 1.0:
            raise ValueError(f"v0 must be in (0, 1], got {self.v0}")
        if self.alpha < 0 or self.sigma < 0 or self.delta < 0:
            raise ValueError("alpha, sigma and delta must be non-negative")
        if self.t_mon < 1:
            raise ValueError("t_mon must be >= 1")
        if self.cache_capacity < 1 or self.ttl_init < 0 or self.mean_intergen <= 0:
            raise ValueError("need cache_capacity >= 1, ttl_init >= 0, mean_intergen > 0")
        if g is not None:
            if g.node_count != self.n:
                raise ValueError(f"config n={self.n} but graph has {g.node_count} nodes")
            d = diameter(g)
            if self.ttl_init < d:
                raise ValueError(f"ttl_init={self.ttl_init} below graph diameter {d}")

    def to_dict(self) -> dict:
        return asdict(self)


GEN_FIELDS = ("msg_id", "source", "time")
RECEPTION_FIELDS = ("msg_id", "source", "receiver", "hops", "time")


@dataclass
class Trace:
    """Generated messages and first receptions as integer record arrays.

    ``generated`` has columns ``msg_id, source, time``;
    ``first_receptions`` has ``msg_id, source, receiver, hops, time``.
    """

    generated: np.ndarray = field(default_factory=lambda: np.empty((0, 3), dtype=np.int64))
    first_receptions: np.ndarray = field(default_factory=lambda: np.empty((0, 5), dtype=np.int64))
    data_tx: int = 0
    control_tx: int = 0

    def __eq__(self, other):
        return (
            isinstance(other, Trace)
            and np.array_equal(self.generated, other.generated)
            and np.array_equal(self.first_receptions, other.first_receptions)
            and (self.data_tx, self.control_tx) == (other.data_tx, other.control_tx)
        )

    def to_text(self) -> str:
        buf = io.StringIO()
        if len(self.generated):
            np.savetxt(buf, self.generated, fmt="G,%d,%d,%d")
        if len(self.first_receptions):
            np.savetxt(buf, self.first_receptions, fmt="R,%d,%d,%d,%d,%d")
        buf.write(f"S,{self.data_tx},{self.control_tx}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "Trace":
        gen, rec = [], []
        footer = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            tag, _, rest = line.partition(",")
            try:
                vals = tuple(int(x) for x in rest.split(","))
            except ValueError:
                vals = ()
            if tag == "G" and len(vals) == 3:
                gen.append(vals)
            elif tag == "R" and len(vals) == 5:
                rec.append(vals)
            elif tag == "S" and len(vals) == 2:
                footer = vals
            else:
                raise ValueError(f"line {lineno}: malformed trace record {line!r}")
        if footer is None:
            raise ValueError("trace has no S footer")
        return cls(
            np.array(gen, dtype=np.int64).reshape(-1, 3),
            np.array(rec, dtype=np.int64).reshape(-1, 5),
            *footer,
        )


def schedule_next_generation(t: int, rng, mean_intergen: float) -> int:
    """Next event time: ``t`` plus an exponential gap, rounded, at least one step."""
    return t + max(1, round(rng.expovariate(1.0 / mean_intergen)))


def generation_schedule(config: SimConfig, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Times and nodes of every generation event up to ``config.steps``, in firing order.

    Generation does not depend on the protocol, so the whole schedule can be
    replayed up front. Same-step events fire in scheduling order.
    """
    rngs = [stream(config.run_seed, v, GENERATION) for v in range(n)]
    heap = []
    seq = 0
    for v in range(n):
        heap.append((schedule_next_generation(0, rngs[v], config.mean_intergen), seq, v))
        seq += 1
    heapq.heapify(heap)
    times, nodes = [], []
    while heap and heap[0][0] <= config.steps:
        t, _, v = heapq.heappop(heap)
        times.append(t)
        nodes.append(v)
        heapq.heappush(heap, (schedule_next_generation(t, rngs[v], config.mean_intergen), seq, v))
        seq += 1
    return np.array(times, dtype=np.int64), np.array(nodes, dtype=np.int64)


def run(config: SimConfig, g: Graph, engine: str = "compiled") -> Trace:
    """Simulate steps ``0..config.steps`` on ``g`` and return the trace."""
    if engine == "reference":
        return run_reference(config, g)
    if engine != "compiled":
        raise ValueError(f"unknown engine {engine!r}")
    from . import _kernel

    config.validate(g)
    n = g.node_count
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(a) for a in g.adjacency])
    indices = np.array([u for a in g.adjacency for u in a], dtype=np.int64)
    rev_edge = -np.ones((n, n), dtype=np.int64)
    for v in range(n):
        for e in range(indptr[v], indptr[v + 1]):
            rev_edge[v, indices[e]] = e
    gen_time, gen_node = generation_schedule(config, n)
    fwd = np.array([stream_seed(config.run_seed, v, FORWARDING) for v in range(n)], dtype=np.uint64)
    sel = np.array([stream_seed(config.run_seed, v, FORWARDER_SELECTION) for v in range(n)], dtype=np.uint64)
    code = ["fixed-prob", "prob-bcast", "adaptive1", "adaptive2", "adaptive3"].index(config.policy)
    recs, m, data_tx, control_tx = _kernel.simulate(
        n, indptr, indices, rev_edge, config.steps, config.ttl_init, config.cache_capacity, code,
        float(config.v0), float(config.sigma), float(config.delta), int(config.t_mon),
        np.full(n, low_rate_bound(config.alpha, config.rate, config.t_mon)), gen_time, gen_node, fwd, sel,
    )
    generated = np.column_stack([np.arange(m, dtype=np.int64), gen_node, gen_time])
    receptions = np.column_stack([recs[:, 0], gen_node[recs[:, 0]], recs[:, 1], recs[:, 2], recs[:, 3]])
    return Trace(generated, receptions.astype(np.int64), int(data_tx), int(control_tx))


def run_reference(config: SimConfig, g: Graph) -> Trace:
    """Event-by-event run driving the :mod:`gossipsim.protocol` policy objects."""
    config.validate(g)
    n = g.node_count
    policy = make_policy(config.policy, config.v0, config.sigma, config.delta, config.alpha,
                         config.t_mon, [config.rate] * n)
    peers = [
        PeerState(
            node_id=v,
            neighbors=g.adjacency[v],
            cache=LRUCache(config.cache_capacity),
            rng=stream(config.run_seed, v, FORWARDING),
            select_rng=stream(config.run_seed, v, FORWARDER_SELECTION),
            thresholds=policy.new_thresholds(),
        )
        for v in range(n)
    ]
    gen_rngs = [stream(config.run_seed, v, GENERATION) for v in range(n)]
    mean_intergen = config.mean_intergen
    steps = config.steps
    monitors = policy.monitors

    cal = EventCalendar()
    for v in range(n):
        cal.schedule(schedule_next_generation(0, gen_rngs[v], mean_intergen), EventKind.GENERATE, v)
    if monitors:
        for v in range(n):
            cal.schedule(config.t_mon, EventKind.MONITOR_TICK, v)

    generated: list[tuple] = []
    receptions: list[tuple] = []
    recorded: set[tuple[int, int]] = set()
    data_tx = control_tx = 0
    next_id = 0

    for t in range(steps + 1):
        slot = cal.pop(t)
        if slot is None:
            continue
        deliveries, stimuli, generations, ticks = slot
        nxt = cal.slot(t + 1)[EventKind.DELIVER] if t < steps else None

        for to, frm, msg in deliveries:
            p = peers[to]
            if p.cache.touch(msg.msg_id):
                continue
            src = msg.source
            if src != to:
                if (msg.msg_id, to) not in recorded:
                    recorded.add((msg.msg_id, to))
                    receptions.append((msg.msg_id, src, to, msg.hops, t))
                if monitors:
                    record_reception(p.stats, src, frm)
            out = policy.on_receive(p, msg, frm, t)
            data_tx += len(out)
            if out and nxt is not None:
                nxt.extend((nb, to, m) for nb, m in out)

        for to, stim in stimuli:
            policy.on_stimulus(peers[to], stim, t)

        for v in generations:
            p = peers[v]
            msg = Message(next_id, v, t, config.ttl_init, 0)
            next_id += 1
            generated.append((msg.msg_id, v, t))
            p.cache.touch(msg.msg_id)
            out = policy.on_local_event(p, msg, t)
            data_tx += len(out)
            if out and nxt is not None:
                nxt.extend((nb, v, m) for nb, m in out)
            cal.schedule(schedule_next_generation(t, gen_rngs[v], mean_intergen), EventKind.GENERATE, v)

        for v in ticks:
            out = policy.on_monitor_tick(peers[v], t)
            control_tx += len(out)
            if out and t < steps:
                cal.slot(t + 1)[EventKind.DELIVER_STIMULUS].extend(out)
            cal.schedule(t + config.t_mon, EventKind.MONITOR_TICK, v)

    return Trace(
        np.array(generated, dtype=np.int64).reshape(-1, 3),
        np.array(receptions, dtype=np.int64).reshape(-1, 5),
        data_tx,
        control_tx,
    )
