import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gossipsim.monitoring import StimulusMessage
from gossipsim.protocol import (
    POLICIES,
    LRUCache,
    Message,
    PeerState,
    Verdict,
    accept_or_drop,
    adaptive1_forward,
    adaptive2_forward,
    adaptive3_forward,
    fixed_probability_forward,
    make_policy,
    probabilistic_broadcast_forward,
)
from gossipsim.rng import SplitMix64
from gossipsim.stimulus import Keying, ThresholdTable

TRIALS = 100_000


def peer(node=0, neighbors=(1, 2, 3, 4), seed=1, table=None, cache=256):
    return PeerState(node, tuple(neighbors), LRUCache(cache), random.Random(seed), random.Random(seed + 1), table)


def relayed(source=9, ttl=8):
    return Message(msg_id=1, source=source, creation_time=0, ttl=ttl, hops=8 - ttl)


def forward_frequencies(fn, p, msg, frm, *args):
    counts = dict.fromkeys(p.neighbors, 0)
    for _ in range(TRIALS):
        for nb, _m in fn(p, msg, frm, *args):
            counts[nb] += 1
    return {nb: c / TRIALS for nb, c in counts.items()}


def test_fixed_probability_extremes():
    p = peer()
    assert [nb for nb, _ in fixed_probability_forward(p, relayed(), 2, 1.0)] == [1, 3, 4]
    local = Message(5, 0, 0, 8)
    assert fixed_probability_forward(p, local, None, 0.0) == []


def test_fixed_probability_frequency():
    freqs = forward_frequencies(fixed_probability_forward, peer(), relayed(), None, 0.5)
    assert all(f == pytest.approx(0.5, abs=0.01) for f in freqs.values())


def test_fixed_probability_draw_discipline():
    # one draw per considered neighbor, ascending order
    p = peer(seed=42)
    out = fixed_probability_forward(p, relayed(), 3, 0.5)
    rng = random.Random(42)
    expected = [nb for nb in (1, 2, 4) if rng.random() < 0.5]
    assert [nb for nb, _ in out] == expected
    assert p.rng.getstate() == rng.getstate()


def test_forwarded_copy_decrements_ttl():
    (nb, m), *_ = fixed_probability_forward(peer(), relayed(ttl=5), None, 1.0)
    assert (m.ttl, m.hops, m.msg_id, m.source) == (4, 4, 1, 9)


def test_exhausted_ttl_is_not_forwarded():
    p = peer()
    for fn, arg in [(fixed_probability_forward, 1.0), (probabilistic_broadcast_forward, 1.0)]:
        assert fn(p, relayed(ttl=0), None, arg) == []
    p = peer(table=ThresholdTable(Keying.RECEIVER, 1.0, 0.0, 0))
    assert adaptive1_forward(p, relayed(ttl=0), None, 0) == []


def test_prob_broadcast_local_event_goes_everywhere():
    p = peer()
    for v0 in (0.01, 0.5, 1.0):
        out = probabilistic_broadcast_forward(p, Message(3, 0, 0, 8), None, v0)
        assert [nb for nb, _ in out] == [1, 2, 3, 4]


def test_prob_broadcast_zero_probability_relay():
    p = peer()
    assert all(probabilistic_broadcast_forward(p, relayed(), 1, 1e-300) == [] for _ in range(1000))


def test_prob_broadcast_all_or_nothing():
    p = peer(seed=3)
    sizes = [len(probabilistic_broadcast_forward(p, relayed(), 1, 0.3)) for _ in range(TRIALS)]
    assert set(sizes) == {0, 3}
    assert sizes.count(3) / TRIALS == pytest.approx(0.3, abs=0.01)


def test_adaptive1_saturated_matches_fixed():
    p = peer(table=ThresholdTable(Keying.RECEIVER, 1.0, 0.5, 100))
    assert adaptive1_forward(p, relayed(), 2, 10) == fixed_probability_forward(peer(), relayed(), 2, 1.0)


def test_adaptive1_stimulated_neighbor_frequency():
    table = ThresholdTable(Keying.RECEIVER, 0.3, 0.4, 10**9)
    table.stimulate(2, 0)
    freqs = forward_frequencies(adaptive1_forward, peer(table=table), relayed(), None, 0)
    assert freqs[2] == pytest.approx(0.7, abs=0.01)
    for nb in (1, 3, 4):
        assert freqs[nb] == pytest.approx(0.3, abs=0.01)


def test_adaptive1_zero_sigma_collapses_to_fixed():
    table = ThresholdTable(Keying.RECEIVER, 0.4, 0.0, 300)
    for nb in (1, 2, 3, 4):
        table.stimulate(nb, 0)
    a = forward_frequencies(adaptive1_forward, peer(table=table, seed=8), relayed(), None, 5)
    f = forward_frequencies(fixed_probability_forward, peer(seed=9), relayed(), None, 0.4)
    for nb in a:
        assert a[nb] == pytest.approx(f[nb], abs=0.01)


def test_adaptive1_same_draws_as_fixed_when_unstimulated():
    p1 = peer(seed=5, table=ThresholdTable(Keying.RECEIVER, 0.35, 0.2, 300))
    p2 = peer(seed=5)
    for _ in range(200):
        assert adaptive1_forward(p1, relayed(), 1, 0) == fixed_probability_forward(p2, relayed(), 1, 0.35)


def test_adaptive2_per_source_rates():
    table = ThresholdTable(Keying.SOURCE, 0.2, 0.5, 10**9)
    table.stimulate(7, 0)
    p = peer(table=table)
    hot = forward_frequencies(adaptive2_forward, p, relayed(source=7), None, 0)
    cold = forward_frequencies(adaptive2_forward, p, relayed(source=8), None, 0)
    assert all(f == pytest.approx(0.7, abs=0.01) for f in hot.values())
    assert all(f == pytest.approx(0.2, abs=0.01) for f in cold.values())


def test_adaptive2_local_event_keyed_by_self():
    table = ThresholdTable(Keying.SOURCE, 0.01, 0.99, 10**9)
    table.stimulate(0, 0)
    out = adaptive2_forward(peer(table=table), Message(4, 0, 0, 8), None, 0)
    assert [nb for nb, _ in out] == [1, 2, 3, 4]


def test_adaptive3_selectivity():
    table = ThresholdTable(Keying.SOURCE_RECEIVER, 0.25, 0.5, 10**9)
    table.stimulate((7, 1), 0)
    p = peer(table=table)
    s_msgs = forward_frequencies(adaptive3_forward, p, relayed(source=7), None, 0)
    other = forward_frequencies(adaptive3_forward, p, relayed(source=8), None, 0)
    assert s_msgs[1] == pytest.approx(0.75, abs=0.01)
    assert s_msgs[2] == pytest.approx(0.25, abs=0.01)
    assert other[1] == pytest.approx(0.25, abs=0.01)


def test_adaptive3_capped_rate():
    table = ThresholdTable(Keying.SOURCE_RECEIVER, 0.8, 0.7, 10**9)
    table.stimulate((7, 3), 0)
    assert table.value((7, 3), 0) == 1.0
    p = peer(table=table)
    assert all(any(nb == 3 for nb, _ in adaptive3_forward(p, relayed(source=7), None, 0)) for _ in range(1000))


def test_accept_or_drop():
    p = peer()
    m = relayed()
    assert accept_or_drop(p, m) is Verdict.FIRST_COPY
    assert accept_or_drop(p, m) is Verdict.DUPLICATE


def test_lru_forced_eviction():
    p = peer(cache=1)
    a, b = Message(1, 9, 0, 8), Message(2, 9, 0, 8)
    assert [accept_or_drop(p, x) for x in (a, b, a)] == [Verdict.FIRST_COPY] * 3


def test_lru_lookup_refreshes_recency():
    c = LRUCache(2)
    c.touch(1), c.touch(2), c.touch(1), c.touch(3)
    assert c.keys() == [1, 3]


class ListLRU:
    def __init__(self, capacity):
        self.capacity = capacity
        self.items = []

    def touch(self, key):
        hit = key in self.items
        if hit:
            self.items.remove(key)
        self.items.append(key)
        if len(self.items) > self.capacity:
            self.items.pop(0)
        return hit


@settings(max_examples=50, deadline=None)
@given(ids=st.lists(st.integers(0, 400), max_size=2000), cap=st.sampled_from([1, 3, 17, 256]))
def test_lru_matches_list_scan_model(ids, cap):
    fast, ref = LRUCache(cap), ListLRU(cap)
    for i in ids:
        assert fast.touch(i) == ref.touch(i)
        assert len(fast) <= cap
    assert fast.keys() == ref.items


def test_lru_random_sequence_capacity_256():
    rng = random.Random(0)
    fast, ref = LRUCache(256), ListLRU(256)
    for _ in range(20_000):
        i = rng.randrange(600)
        assert fast.touch(i) == ref.touch(i)


@settings(max_examples=100, deadline=None)
@given(
    name=st.sampled_from(sorted(POLICIES)),
    v0=st.floats(0.01, 1.0),
    neighbors=st.sets(st.integers(1, 30), min_size=1, max_size=8),
    frm_idx=st.integers(0, 8),
    ttl=st.integers(0, 8),
    source=st.integers(0, 30),
    seed=st.integers(0, 2**32),
)
def test_transmission_safety(name, v0, neighbors, frm_idx, ttl, source, seed):
    nbrs = tuple(sorted(neighbors))
    frm = nbrs[frm_idx] if frm_idx < len(nbrs) and source != 0 else None
    pol = make_policy(name, v0, sigma=0.3, delta=50, alpha=1, t_mon=10, rates=[0.1] * 31)
    p = PeerState(0, nbrs, LRUCache(8), SplitMix64(seed), SplitMix64(seed + 1), pol.new_thresholds())
    msg = Message(1, source, 0, ttl, 8 - ttl)
    out = pol.on_receive(p, msg, frm, 3) if frm is not None else pol.on_local_event(p, msg, 3)
    targets = [nb for nb, _ in out]
    assert len(targets) == len(set(targets))
    assert all(nb in nbrs and nb != frm for nb in targets)
    assert all(m.ttl == ttl - 1 >= 0 and m.hops == 9 - ttl for _, m in out)

    # identical stream state gives identical output
    p2 = PeerState(0, nbrs, LRUCache(8), SplitMix64(seed), SplitMix64(seed + 1), pol.new_thresholds())
    out2 = pol.on_receive(p2, msg, frm, 3) if frm is not None else pol.on_local_event(p2, msg, 3)
    assert out == out2


def test_stimulus_hook_keys():
    rates = [0.1] * 10
    for name, key in [("adaptive1", 4), ("adaptive2", 7), ("adaptive3", (7, 4))]:
        pol = make_policy(name, 0.2, sigma=0.3, delta=100, alpha=1, t_mon=10, rates=rates)
        p = peer(node=2, neighbors=(1, 4), table=pol.new_thresholds())
        pol.on_stimulus(p, StimulusMessage(requester=4, about_source=7, issue_time=5), 6)
        assert list(p.thresholds.entries) == [key]
        assert p.thresholds.value(key, 6) == pytest.approx(0.5)


def test_receiver_keyed_stimulus_leaves_other_neighbors():
    pol = make_policy("adaptive1", 0.2, sigma=0.3, delta=100, alpha=1, t_mon=10, rates=[0.1] * 10)
    p = peer(node=2, neighbors=(1, 4, 5), table=pol.new_thresholds())
    pol.on_stimulus(p, StimulusMessage(4, 7, 0), 1)
    assert p.thresholds.value(4, 1) == pytest.approx(0.5)
    assert p.thresholds.value(1, 1) == p.thresholds.value(5, 1) == 0.2


def test_unknown_policy():
    with pytest.raises(ValueError):
        make_policy("fixed-fanout", 0.5)
    with pytest.raises(ValueError):
        make_policy("fixed-prob", 0.0)
