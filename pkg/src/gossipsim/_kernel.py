"""Compiled run loop; mirrors ``simengine.run_reference`` draw for draw.

State is held in flat arrays: CSR adjacency, an exact LRU list per node,
dense threshold tables and per-(node, source) window counters.
"""

import numpy as np
from numba import njit

FIXED, PBCAST, ADAPT1, ADAPT2, ADAPT3 = 0, 1, 2, 3, 4

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@njit(cache=True, inline="always")
def _draw(states, i):
    z = states[i] + _GOLDEN
    states[i] = z
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return np.float64(z >> _S11) * 1.1102230246251565e-16


@njit(cache=True)
def _grow(buf, used, extra):
    if used + extra <= buf.shape[0]:
        return buf
    cap = buf.shape[0] * 2
    while cap < used + extra:
        cap *= 2
    out = np.empty((cap, buf.shape[1]), dtype=buf.dtype)
    out[:used] = buf[:used]
    return out


@njit(cache=True, inline="always")
def _touch(node, msg, slot_of, keys, prv, nxt, head, tail, size):
    """LRU insert-or-refresh; returns True on a hit."""
    s = slot_of[node, msg]
    if s >= 0:
        if tail[node] != s:
            p = prv[node, s]
            q = nxt[node, s]
            if p >= 0:
                nxt[node, p] = q
            else:
                head[node] = q
            prv[node, q] = p
            t = tail[node]
            nxt[node, t] = s
            prv[node, s] = t
            nxt[node, s] = -1
            tail[node] = s
        return True
    cap = keys.shape[1]
    if size[node] < cap:
        s = size[node]
        size[node] += 1
    else:
        s = head[node]
        slot_of[node, keys[node, s]] = -1
        h = nxt[node, s]
        head[node] = h
        if h >= 0:
            prv[node, h] = -1
        else:
            tail[node] = -1
    keys[node, s] = msg
    slot_of[node, msg] = s
    t = tail[node]
    prv[node, s] = t
    nxt[node, s] = -1
    if t >= 0:
        nxt[node, t] = s
    else:
        head[node] = s
    tail[node] = s
    return False


@njit(cache=True, inline="always")
def _value(lvl, last, i, j, t, base, delta):
    ls = last[i, j]
    if ls < 0 or t >= ls + delta:
        return base
    return base + (lvl[i, j] - base) * (1.0 - (t - ls) / delta)


@njit(cache=True, inline="always")
def _stimulate(lvl, last, i, j, t, base, sigma, delta):
    v = _value(lvl, last, i, j, t, base, delta) + sigma
    lvl[i, j] = 1.0 if v > 1.0 else v
    last[i, j] = t


@njit(cache=True, inline="always")
def _forward(p, msg, src, frm, hops, t, out, n_out, policy, v0, indptr, indices,
             fwd_state, ttl_init, lvl, last, base, delta):
    """Append (neighbor, msg, hops+1) transmissions for peer p; return new count."""
    if hops >= ttl_init:
        return n_out
    lo = indptr[p]
    hi = indptr[p + 1]
    if policy == PBCAST:
        if src != p and not (_draw(fwd_state, p) < v0):
            return n_out
        for e in range(lo, hi):
            nb = indices[e]
            if nb != frm:
                out[n_out, 0] = nb
                out[n_out, 1] = msg
                out[n_out, 2] = hops + 1
                n_out += 1
        return n_out
    gamma = v0
    if policy == ADAPT2:
        gamma = _value(lvl, last, p, src, t, base, delta)
    for e in range(lo, hi):
        nb = indices[e]
        if nb == frm:
            continue
        u = _draw(fwd_state, p)
        if policy == ADAPT1:
            thr = _value(lvl, last, 0, e, t, base, delta)
        elif policy == ADAPT3:
            thr = _value(lvl, last, src, e, t, base, delta)
        else:
            thr = gamma
        if u < thr:
            out[n_out, 0] = nb
            out[n_out, 1] = msg
            out[n_out, 2] = hops + 1
            n_out += 1
    return n_out


@njit(cache=True)
def simulate(n, indptr, indices, rev_edge, steps, ttl_init, cache_cap, policy, v0, sigma, delta,
             t_mon, bounds, gen_time, gen_node, fwd_state, sel_state):
    m = gen_time.shape[0]
    monitors = policy >= ADAPT1
    cap = min(cache_cap, max(m, 1))
    slot_of = -np.ones((n, max(m, 1)), dtype=np.int32)
    keys = np.empty((n, cap), dtype=np.int32)
    prv = np.empty((n, cap), dtype=np.int32)
    nxt = np.empty((n, cap), dtype=np.int32)
    head = -np.ones(n, dtype=np.int32)
    tail = -np.ones(n, dtype=np.int32)
    size = np.zeros(n, dtype=np.int32)
    seen = np.zeros((max(m, 1), n), dtype=np.bool_)

    n_edges = indptr[n]
    if policy == ADAPT1:
        lvl = np.empty((1, n_edges))
        last = -np.ones((1, n_edges), dtype=np.int64)
    elif policy == ADAPT2:
        lvl = np.empty((n, n))
        last = -np.ones((n, n), dtype=np.int64)
    elif policy == ADAPT3:
        lvl = np.empty((n, n_edges))
        last = -np.ones((n, n_edges), dtype=np.int64)
    else:
        lvl = np.empty((1, 1))
        last = -np.ones((1, 1), dtype=np.int64)
    counts = np.zeros((n, n), dtype=np.int64)
    fw_first = -np.ones((n, n), dtype=np.int64)
    fw_multi = np.zeros((n, n), dtype=np.bool_)

    cur = np.empty((1024, 4), dtype=np.int64)   # to, frm, msg, hops
    n_cur = 0
    nxt_buf = np.empty((1024, 4), dtype=np.int64)
    n_nxt = 0
    stim_cur = np.empty((256, 3), dtype=np.int64)  # to, requester, about_source
    n_stim_cur = 0
    stim_nxt = np.empty((256, 3), dtype=np.int64)
    n_stim_nxt = 0
    out = np.empty((max(1, n), 3), dtype=np.int64)
    recs = np.empty((4096, 4), dtype=np.int64)  # msg, receiver, hops, time
    n_recs = 0
    data_tx = 0
    control_tx = 0
    g = 0

    for t in range(steps + 1):
        can_send = t < steps
        for k in range(n_cur):
            to = cur[k, 0]
            frm = cur[k, 1]
            msg = cur[k, 2]
            hops = cur[k, 3]
            if _touch(to, msg, slot_of, keys, prv, nxt, head, tail, size):
                continue
            src = gen_node[msg]
            if src != to:
                if not seen[msg, to]:
                    seen[msg, to] = True
                    if n_recs == recs.shape[0]:
                        recs = _grow(recs, n_recs, 1)
                    recs[n_recs, 0] = msg
                    recs[n_recs, 1] = to
                    recs[n_recs, 2] = hops
                    recs[n_recs, 3] = t
                    n_recs += 1
                if monitors:
                    counts[to, src] += 1
                    f = fw_first[to, src]
                    if f < 0:
                        fw_first[to, src] = frm
                    elif f != frm:
                        fw_multi[to, src] = True
            n_out = _forward(to, msg, src, frm, hops, t, out, 0, policy, v0, indptr, indices,
                             fwd_state, ttl_init, lvl, last, v0, delta)
            data_tx += n_out
            if can_send and n_out > 0:
                if n_nxt + n_out > nxt_buf.shape[0]:
                    nxt_buf = _grow(nxt_buf, n_nxt, n_out)
                for j in range(n_out):
                    nxt_buf[n_nxt, 0] = out[j, 0]
                    nxt_buf[n_nxt, 1] = to
                    nxt_buf[n_nxt, 2] = out[j, 1]
                    nxt_buf[n_nxt, 3] = out[j, 2]
                    n_nxt += 1

        for k in range(n_stim_cur):
            q = stim_cur[k, 0]
            req = stim_cur[k, 1]
            about = stim_cur[k, 2]
            if policy == ADAPT1:
                _stimulate(lvl, last, 0, rev_edge[q, req], t, v0, sigma, delta)
            elif policy == ADAPT2:
                _stimulate(lvl, last, q, about, t, v0, sigma, delta)
            else:
                _stimulate(lvl, last, about, rev_edge[q, req], t, v0, sigma, delta)

        while g < m and gen_time[g] == t:
            v = gen_node[g]
            _touch(v, g, slot_of, keys, prv, nxt, head, tail, size)
            n_out = _forward(v, g, v, -1, 0, t, out, 0, policy, v0, indptr, indices,
                             fwd_state, ttl_init, lvl, last, v0, delta)
            data_tx += n_out
            if can_send and n_out > 0:
                if n_nxt + n_out > nxt_buf.shape[0]:
                    nxt_buf = _grow(nxt_buf, n_nxt, n_out)
                for j in range(n_out):
                    nxt_buf[n_nxt, 0] = out[j, 0]
                    nxt_buf[n_nxt, 1] = v
                    nxt_buf[n_nxt, 2] = out[j, 1]
                    nxt_buf[n_nxt, 3] = out[j, 2]
                    n_nxt += 1
            g += 1

        if monitors and t > 0 and t % t_mon == 0:
            for p in range(n):
                lo = indptr[p]
                deg = indptr[p + 1] - lo
                for i in range(n):
                    if i == p or not (counts[p, i] < bounds[i]):
                        continue
                    if fw_first[p, i] >= 0 and not fw_multi[p, i]:
                        q = fw_first[p, i]
                    else:
                        q = indices[lo + np.int64(_draw(sel_state, p) * deg)]
                    control_tx += 1
                    if can_send:
                        if n_stim_nxt == stim_nxt.shape[0]:
                            stim_nxt = _grow(stim_nxt, n_stim_nxt, 1)
                        stim_nxt[n_stim_nxt, 0] = q
                        stim_nxt[n_stim_nxt, 1] = p
                        stim_nxt[n_stim_nxt, 2] = i
                        n_stim_nxt += 1
                counts[p, :] = 0
                fw_first[p, :] = -1
                fw_multi[p, :] = False

        cur, nxt_buf = nxt_buf, cur
        n_cur = n_nxt
        n_nxt = 0
        stim_cur, stim_nxt = stim_nxt, stim_cur
        n_stim_cur = n_stim_nxt
        n_stim_nxt = 0

    return recs[:n_recs].copy(), g, data_tx, control_tx
