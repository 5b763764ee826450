"""Per-peer reception monitoring and low-rate detection.

Counts are kept over tumbling windows of ``t_mon`` steps. At each tick a peer
flags every other source whose window count fell below ``alpha * rate * t_mon``
and asks one neighbor per flagged source to raise its forwarding probability.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence


class StimulusMessage(NamedTuple):
    requester: int
    about_source: int
    issue_time: int


@dataclass
class ReceptionStats:
    window_counts: dict[int, int] = field(default_factory=dict)
    forwarders: dict[int, set[int]] = field(default_factory=dict)
    window_start: int = 0

    def reset(self, t: int) -> None:
        self.window_counts = {}
        self.forwarders = {}
        self.window_start = t


def record_reception(stats: ReceptionStats, source: int, forwarder: int) -> ReceptionStats:
    """Count a first copy from ``source`` delivered by neighbor ``forwarder``."""
    stats.window_counts[source] = stats.window_counts.get(source, 0) + 1
    fw = stats.forwarders.get(source)
    if fw is None:
        stats.forwarders[source] = {forwarder}
    else:
        fw.add(forwarder)
    return stats


def low_rate_bound(alpha: float, rate: float, t_mon: int) -> float:
    """``alpha * rate * t_mon`` snapped to 1e-9.

    The parameters are usually short rationals (1/3, 1/200) whose float
    product can land a hair either side of an integer; since counts are
    integers, snapping keeps ``R < bound`` faithful to the rational value.
    """
    return round(alpha * rate * t_mon, 9)


def retrieve_peers_low_rate(
    stats: ReceptionStats,
    rates: Mapping[int, float] | Sequence[float],
    alpha: float,
    t_mon: int,
    self_id: int,
) -> list[int]:
    """Sources (other than ``self_id``) with ``R_i < alpha * rate_i * t_mon``, ascending."""
    counts = stats.window_counts
    if isinstance(rates, Mapping):
        items = sorted(rates.items())
    else:
        items = enumerate(rates)
    return [i for i, w in items if i != self_id and counts.get(i, 0) < low_rate_bound(alpha, w, t_mon)]


def select_forwarder(stats: ReceptionStats, source: int, neighbors: Sequence[int], rng: random.Random) -> int:
    """The unique forwarder of ``source`` if there is one, else a uniform random neighbor."""
    if not neighbors:
        raise ValueError("peer has no neighbors")
    fw = stats.forwarders.get(source)
    if fw is not None and len(fw) == 1:
        return next(iter(fw))
    return neighbors[rng.randrange(len(neighbors))]


def monitor_tick(
    stats: ReceptionStats,
    self_id: int,
    neighbors: Sequence[int],
    rates: Mapping[int, float] | Sequence[float],
    alpha: float,
    t_mon: int,
    t: int,
    rng: random.Random,
) -> list[tuple[int, StimulusMessage]]:
    """Close the window ending at ``t``: one ``(target, stimulus)`` per flagged source."""
    out = []
    for j in retrieve_peers_low_rate(stats, rates, alpha, t_mon, self_id):
        q = select_forwarder(stats, j, neighbors, rng)
        out.append((q, StimulusMessage(self_id, j, t)))
    stats.reset(t)
    return out
