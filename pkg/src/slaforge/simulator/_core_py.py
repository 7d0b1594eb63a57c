"""Pure-Python day-loop kernels.

This module and the compiled twin (_core_cy) implement the same algorithm
with the same random-stream consumption, documented here once:

Per day, in order:
1. arrivals join their queues in record order (city policy: each arrival
   consumes one uniform for entry thinning unless its fraction is 0 or 1);
2. borough policy: the day's capacity is split over all boroughs by one
   multinomial in budget weights, then boroughs are served in canonical
   order; a borough splits its allocation over its backlogged categories by
   a multinomial in GPS weights, serving categories in canonical order and
   re-splitting any oversubscribed remainder over the still-backlogged
   categories; capacity a borough cannot use returns to the city pool and is
   re-split over still-backlogged boroughs (renormalized budget weights),
   until no capacity or no backlog remains;
   city policy: capacity is split over all backlogged (borough, category)
   pairs by one multinomial in GPS weights with the same resplit rule;
3. serving one queue draws one uniform per inspected incident to pick
   positions among the earliest window of size n + ceil(rho * (backlog - n))
   (a pure-FCFS window, rho = 0, draws nothing);
4. borough policy only: on review days each backlogged incident survives
   with its inspection fraction (one uniform each; fractions of exactly 0
   or 1 draw nothing).

Every multinomial is realized as sequential categorical draws (one uniform
per unit) over the candidates in canonical order, which is exactly a
multinomial sample. A draw with a single positive-weight candidate consumes
no uniform (the outcome is forced); an all-zero weight group falls back to
uniform weights, keeping the kernel work-conserving.

Fate codes: 0 = still backlogged at the end, 1 = inspected, 2 = dropped.
"""

from __future__ import annotations

import math

import numpy as np

FATE_BACKLOG = 0
FATE_INSPECTED = 1
FATE_DROPPED = 2

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DNORM = 1.0 / 9007199254740992.0


class _Stream:
    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = seed & _MASK64

    def next(self) -> float:
        s = (self.state + _GAMMA) & _MASK64
        self.state = s
        z = ((s ^ (s >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        z ^= z >> 31
        return (z >> 11) * _DNORM


def _alloc(rng, units, weights, counts):
    """Split `units` into counts (same length as weights) by sequential
    categorical draws. All-zero weights mean uniform. Writes into counts."""
    m = len(weights)
    for i in range(m):
        counts[i] = 0
    total = 0.0
    npos = 0
    last_pos = -1
    for i in range(m):
        w = weights[i]
        total += w
        if w > 0.0:
            npos += 1
            last_pos = i
    if npos == 1:
        counts[last_pos] = units
        return
    if npos == 0:
        if m == 1:
            counts[0] = units
            return
        cum = [float(i + 1) for i in range(m)]
        total = float(m)
        use_w = [1.0] * m
    else:
        cum = []
        acc = 0.0
        for i in range(m):
            acc += weights[i]
            cum.append(acc)
        total = acc
        use_w = weights
    for _ in range(units):
        u = rng.next() * total
        j = 0
        while j < m - 1 and u >= cum[j]:
            j += 1
        while j > 0 and use_w[j] <= 0.0:
            j -= 1
        counts[j] += 1


def _serve_queue(rng, queue, head, n_serve, rho, t, fate, eday):
    """Inspect n_serve incidents from one queue at day t; returns new head."""
    size = len(queue) - head
    margin = size - n_serve
    extra = 0
    if rho > 0.0 and margin > 0:
        extra = int(math.ceil(rho * margin))
        if extra > margin:
            extra = margin
    window = n_serve + extra
    if extra == 0:
        for pos in range(head, head + n_serve):
            inc = queue[pos]
            fate[inc] = FATE_INSPECTED
            eday[inc] = t
        return head + n_serve
    idx = list(range(window))
    for j in range(n_serve):
        span = window - j
        u = rng.next()
        off = int(u * span)
        if off >= span:
            off = span - 1
        k = j + off
        idx[j], idx[k] = idx[k], idx[j]
    chosen = idx[:n_serve]
    for pos in chosen:
        inc = queue[head + pos]
        fate[inc] = FATE_INSPECTED
        eday[inc] = t
    chosen_set = set(chosen)
    kept = [queue[head + pos] for pos in range(window) if pos not in chosen_set]
    queue[head : head + window] = kept
    return head


def _compact(queue, head):
    if head > 32 and head * 2 >= len(queue):
        del queue[:head]
        return 0
    return head


def run_borough(
    inc_day,
    inc_queue,
    n_days,
    n_categories,
    n_boroughs,
    capacity,
    budget_frac,
    gps_bm,
    pfrac_bm,
    review_period,
    rho,
    seed,
):
    """Borough-budget day loop. Returns (fate, event_day) per incident."""
    K = n_categories
    B = n_boroughs
    N = len(inc_day)
    inc_day = list(inc_day)
    inc_queue = list(inc_queue)
    capacity = list(capacity)
    budget = [float(v) for v in budget_frac]
    gps = [[float(gps_bm[b][k]) for k in range(K)] for b in range(B)]
    pfrac = [[float(pfrac_bm[b][k]) for k in range(K)] for b in range(B)]
    fate = np.zeros(N, dtype=np.uint8)
    eday = np.full(N, -1, dtype=np.int64)

    queues = [[] for _ in range(B * K)]
    heads = [0] * (B * K)
    per_borough = [0] * B
    total = 0
    rng = _Stream(seed)
    ptr = 0

    alloc = [0] * B
    kcounts = [0] * K
    kweights = [0.0] * K

    for t in range(n_days):
        while ptr < N and inc_day[ptr] == t:
            qid = inc_queue[ptr]
            queues[qid].append(ptr)
            per_borough[qid // K] += 1
            total += 1
            ptr += 1

        cap = capacity[t]
        if cap > 0 and total > 0:
            _alloc(rng, cap, budget, alloc)
            while True:
                surplus = 0
                for b in range(B):
                    give = alloc[b]
                    if give == 0:
                        continue
                    alloc[b] = 0
                    base = b * K
                    while give > 0:
                        act = []
                        for k in range(K):
                            if len(queues[base + k]) - heads[base + k] > 0:
                                act.append(k)
                        if not act:
                            break
                        m = len(act)
                        wts = kweights[:m]
                        for i in range(m):
                            wts[i] = gps[b][act[i]]
                        cts = kcounts[:m]
                        _alloc(rng, give, wts, cts)
                        give = 0
                        for i in range(m):
                            c = cts[i]
                            if c == 0:
                                continue
                            qid = base + act[i]
                            size = len(queues[qid]) - heads[qid]
                            serve = c if c <= size else size
                            give += c - serve
                            if serve > 0:
                                heads[qid] = _serve_queue(
                                    rng, queues[qid], heads[qid], serve, rho,
                                    t, fate, eday,
                                )
                                heads[qid] = _compact(queues[qid], heads[qid])
                                per_borough[b] -= serve
                                total -= serve
                    surplus += give
                if surplus == 0 or total == 0:
                    break
                elig = [b for b in range(B) if per_borough[b] > 0]
                wts = [budget[b] for b in elig]
                cts = [0] * len(elig)
                _alloc(rng, surplus, wts, cts)
                for i, b in enumerate(elig):
                    alloc[b] = cts[i]

        if (t + 1) % review_period == 0:
            for b in range(B):
                base = b * K
                for k in range(K):
                    qid = base + k
                    queue = queues[qid]
                    head = heads[qid]
                    size = len(queue) - head
                    if size == 0:
                        continue
                    p = pfrac[b][k]
                    if p >= 1.0:
                        continue
                    if p <= 0.0:
                        for pos in range(head, len(queue)):
                            inc = queue[pos]
                            fate[inc] = FATE_DROPPED
                            eday[inc] = t
                        queue.clear()
                        heads[qid] = 0
                        per_borough[b] -= size
                        total -= size
                        continue
                    keep_from = 1.0 - p
                    kept = []
                    dropped = 0
                    for pos in range(head, len(queue)):
                        inc = queue[pos]
                        if rng.next() < keep_from:
                            fate[inc] = FATE_DROPPED
                            eday[inc] = t
                            dropped += 1
                        else:
                            kept.append(inc)
                    queue[:] = kept
                    heads[qid] = 0
                    per_borough[b] -= dropped
                    total -= dropped

    return fate, eday


def run_city(
    inc_day,
    inc_queue,
    n_days,
    n_categories,
    n_boroughs,
    capacity,
    gps_bm,
    pfrac_bm,
    rho,
    seed,
):
    """City-budget day loop (entry thinning, one citywide split per day)."""
    K = n_categories
    B = n_boroughs
    Q = B * K
    N = len(inc_day)
    inc_day = list(inc_day)
    inc_queue = list(inc_queue)
    capacity = list(capacity)
    phi = [float(gps_bm[q // K][q % K]) for q in range(Q)]
    pfrac = [float(pfrac_bm[q // K][q % K]) for q in range(Q)]
    fate = np.zeros(N, dtype=np.uint8)
    eday = np.full(N, -1, dtype=np.int64)

    queues = [[] for _ in range(Q)]
    heads = [0] * Q
    total = 0
    rng = _Stream(seed)
    ptr = 0

    for t in range(n_days):
        while ptr < N and inc_day[ptr] == t:
            qid = inc_queue[ptr]
            p = pfrac[qid]
            join = True
            if p >= 1.0:
                pass
            elif p <= 0.0:
                join = False
            else:
                join = rng.next() < p
            if join:
                queues[qid].append(ptr)
                total += 1
            else:
                fate[ptr] = FATE_DROPPED
                eday[ptr] = t
            ptr += 1

        cap = capacity[t]
        if cap > 0 and total > 0:
            give = cap
            while give > 0:
                act = []
                for q in range(Q):
                    if len(queues[q]) - heads[q] > 0:
                        act.append(q)
                if not act:
                    break
                wts = [phi[q] for q in act]
                cts = [0] * len(act)
                _alloc(rng, give, wts, cts)
                give = 0
                for i, qid in enumerate(act):
                    c = cts[i]
                    if c == 0:
                        continue
                    size = len(queues[qid]) - heads[qid]
                    serve = c if c <= size else size
                    give += c - serve
                    if serve > 0:
                        heads[qid] = _serve_queue(
                            rng, queues[qid], heads[qid], serve, rho,
                            t, fate, eday,
                        )
                        heads[qid] = _compact(queues[qid], heads[qid])
                        total -= serve

    return fate, eday
