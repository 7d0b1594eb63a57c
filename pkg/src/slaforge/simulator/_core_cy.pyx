# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled day-loop kernels.

Exact twin of _core_py: same random-stream consumption, same floating-point
operation order, bit-identical outputs. The algorithm contract is documented
once in _core_py's module docstring.
"""

from libc.math cimport ceil
from libcpp.vector cimport vector

import numpy as np

FATE_BACKLOG = 0
FATE_INSPECTED = 1
FATE_DROPPED = 2

ctypedef unsigned long long u64
ctypedef long long i64

cdef double _DNORM = 1.0 / 9007199254740992.0


cdef inline double _next(u64* state) noexcept nogil:
    cdef u64 s = state[0] + <u64>0x9E3779B97F4A7C15
    state[0] = s
    cdef u64 z = (s ^ (s >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    z = z ^ (z >> 31)
    return <double>(z >> 11) * _DNORM


cdef void _alloc(
    u64* state,
    i64 units,
    double* weights,
    i64 m,
    i64* counts,
    vector[double]& cum,
) noexcept nogil:
    cdef i64 i, j, npos, last_pos
    cdef double w, acc, total, u
    cdef bint uniform = False
    for i in range(m):
        counts[i] = 0
    npos = 0
    last_pos = -1
    for i in range(m):
        w = weights[i]
        if w > 0.0:
            npos += 1
            last_pos = i
    if npos == 1:
        counts[last_pos] = units
        return
    cum.resize(m)
    if npos == 0:
        if m == 1:
            counts[0] = units
            return
        for i in range(m):
            cum[i] = <double>(i + 1)
        total = <double>m
        uniform = True
    else:
        acc = 0.0
        for i in range(m):
            acc += weights[i]
            cum[i] = acc
        total = acc
    cdef i64 n
    for n in range(units):
        u = _next(state) * total
        j = 0
        while j < m - 1 and u >= cum[j]:
            j += 1
        if not uniform:
            while j > 0 and weights[j] <= 0.0:
                j -= 1
        counts[j] += 1


cdef i64 _serve_queue(
    u64* state,
    vector[i64]& queue,
    i64 head,
    i64 n_serve,
    double rho,
    i64 t,
    unsigned char* fate,
    i64* eday,
    vector[i64]& idx,
    vector[unsigned char]& mark,
) noexcept nogil:
    cdef i64 size = <i64>queue.size() - head
    cdef i64 margin = size - n_serve
    cdef i64 extra = 0
    cdef i64 window, pos, inc, j, k, off, span, write
    cdef double u
    if rho > 0.0 and margin > 0:
        extra = <i64>ceil(rho * <double>margin)
        if extra > margin:
            extra = margin
    window = n_serve + extra
    if extra == 0:
        for pos in range(head, head + n_serve):
            inc = queue[pos]
            fate[inc] = 1
            eday[inc] = t
        return head + n_serve
    idx.resize(window)
    for j in range(window):
        idx[j] = j
    for j in range(n_serve):
        span = window - j
        u = _next(state)
        off = <i64>(u * <double>span)
        if off >= span:
            off = span - 1
        k = j + off
        pos = idx[j]
        idx[j] = idx[k]
        idx[k] = pos
    mark.assign(window, 0)
    for j in range(n_serve):
        pos = idx[j]
        mark[pos] = 1
        inc = queue[head + pos]
        fate[inc] = 1
        eday[inc] = t
    write = head
    for pos in range(window):
        if not mark[pos]:
            queue[write] = queue[head + pos]
            write += 1
    queue.erase(queue.begin() + write, queue.begin() + head + window)
    return head


cdef inline i64 _compact(vector[i64]& queue, i64 head) noexcept nogil:
    if head > 32 and head * 2 >= <i64>queue.size():
        queue.erase(queue.begin(), queue.begin() + head)
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
    rho_in,
    seed,
):
    """Borough-budget day loop. Returns (fate, event_day) per incident."""
    cdef i64[::1] day = np.ascontiguousarray(inc_day, dtype=np.int64)
    cdef i64[::1] qid_of = np.ascontiguousarray(inc_queue, dtype=np.int64)
    cdef i64[::1] cap_arr = np.ascontiguousarray(capacity, dtype=np.int64)
    cdef double[::1] budget = np.ascontiguousarray(budget_frac, dtype=np.float64)
    cdef double[:, ::1] gps = np.ascontiguousarray(gps_bm, dtype=np.float64)
    cdef double[:, ::1] pfrac = np.ascontiguousarray(pfrac_bm, dtype=np.float64)
    cdef i64 T = n_days
    cdef i64 K = n_categories
    cdef i64 B = n_boroughs
    cdef i64 D = review_period
    cdef double rho = rho_in
    cdef i64 N = day.shape[0]
    fate_arr = np.zeros(N, dtype=np.uint8)
    eday_arr = np.full(N, -1, dtype=np.int64)
    cdef unsigned char[::1] fate = fate_arr
    cdef i64[::1] eday = eday_arr
    cdef u64 state = seed & 0xFFFFFFFFFFFFFFFF

    cdef vector[vector[i64]] queues = vector[vector[i64]](B * K)
    cdef vector[i64] heads = vector[i64](B * K, 0)
    cdef vector[i64] per_borough = vector[i64](B, 0)
    cdef vector[i64] alloc = vector[i64](B, 0)
    cdef vector[i64] act = vector[i64](K)
    cdef vector[double] wts = vector[double](K)
    cdef vector[i64] cts = vector[i64](K)
    cdef vector[i64] elig = vector[i64](B)
    cdef vector[double] ewts = vector[double](B)
    cdef vector[i64] ects = vector[i64](B)
    cdef vector[double] cum
    cdef vector[i64] idx
    cdef vector[unsigned char] mark

    cdef i64 total = 0, ptr = 0
    cdef i64 t, q, b, k, i, base, cap, give, surplus, m, c
    cdef i64 size, serve, head, dropped, write, ne, inc
    cdef double p, keep_from

    with nogil:
        for t in range(T):
            while ptr < N and day[ptr] == t:
                q = qid_of[ptr]
                queues[q].push_back(ptr)
                per_borough[q / K] += 1
                total += 1
                ptr += 1

            cap = cap_arr[t]
            if cap > 0 and total > 0:
                _alloc(&state, cap, &budget[0], B, alloc.data(), cum)
                while True:
                    surplus = 0
                    for b in range(B):
                        give = alloc[b]
                        if give == 0:
                            continue
                        alloc[b] = 0
                        base = b * K
                        while give > 0:
                            m = 0
                            for k in range(K):
                                if <i64>queues[base + k].size() - heads[base + k] > 0:
                                    act[m] = k
                                    m += 1
                            if m == 0:
                                break
                            for i in range(m):
                                wts[i] = gps[b, act[i]]
                            _alloc(&state, give, wts.data(), m, cts.data(), cum)
                            give = 0
                            for i in range(m):
                                c = cts[i]
                                if c == 0:
                                    continue
                                q = base + act[i]
                                size = <i64>queues[q].size() - heads[q]
                                serve = c if c <= size else size
                                give += c - serve
                                if serve > 0:
                                    heads[q] = _serve_queue(
                                        &state, queues[q], heads[q], serve,
                                        rho, t, &fate[0], &eday[0], idx, mark,
                                    )
                                    heads[q] = _compact(queues[q], heads[q])
                                    per_borough[b] -= serve
                                    total -= serve
                        surplus += give
                    if surplus == 0 or total == 0:
                        break
                    ne = 0
                    for b in range(B):
                        if per_borough[b] > 0:
                            elig[ne] = b
                            ewts[ne] = budget[b]
                            ne += 1
                    _alloc(&state, surplus, ewts.data(), ne, ects.data(), cum)
                    for i in range(ne):
                        alloc[elig[i]] = ects[i]

            if (t + 1) % D == 0:
                for b in range(B):
                    base = b * K
                    for k in range(K):
                        q = base + k
                        head = heads[q]
                        size = <i64>queues[q].size() - head
                        if size == 0:
                            continue
                        p = pfrac[b, k]
                        if p >= 1.0:
                            continue
                        if p <= 0.0:
                            for i in range(head, <i64>queues[q].size()):
                                inc = queues[q][i]
                                fate[inc] = 2
                                eday[inc] = t
                            queues[q].clear()
                            heads[q] = 0
                            per_borough[b] -= size
                            total -= size
                            continue
                        keep_from = 1.0 - p
                        write = 0
                        dropped = 0
                        for i in range(head, <i64>queues[q].size()):
                            inc = queues[q][i]
                            if _next(&state) < keep_from:
                                fate[inc] = 2
                                eday[inc] = t
                                dropped += 1
                            else:
                                queues[q][write] = inc
                                write += 1
                        queues[q].resize(write)
                        heads[q] = 0
                        per_borough[b] -= dropped
                        total -= dropped

    return fate_arr, eday_arr


def run_city(
    inc_day,
    inc_queue,
    n_days,
    n_categories,
    n_boroughs,
    capacity,
    gps_bm,
    pfrac_bm,
    rho_in,
    seed,
):
    """City-budget day loop (entry thinning, one citywide split per day)."""
    cdef i64[::1] day = np.ascontiguousarray(inc_day, dtype=np.int64)
    cdef i64[::1] qid_of = np.ascontiguousarray(inc_queue, dtype=np.int64)
    cdef i64[::1] cap_arr = np.ascontiguousarray(capacity, dtype=np.int64)
    cdef double[:, ::1] gps = np.ascontiguousarray(gps_bm, dtype=np.float64)
    cdef double[:, ::1] pfrac2 = np.ascontiguousarray(pfrac_bm, dtype=np.float64)
    cdef i64 T = n_days
    cdef i64 K = n_categories
    cdef i64 B = n_boroughs
    cdef i64 Q = B * K
    cdef double rho = rho_in
    cdef i64 N = day.shape[0]
    fate_arr = np.zeros(N, dtype=np.uint8)
    eday_arr = np.full(N, -1, dtype=np.int64)
    cdef unsigned char[::1] fate = fate_arr
    cdef i64[::1] eday = eday_arr
    cdef u64 state = seed & 0xFFFFFFFFFFFFFFFF

    cdef vector[double] phi = vector[double](Q)
    cdef vector[double] pfrac = vector[double](Q)
    cdef vector[vector[i64]] queues = vector[vector[i64]](Q)
    cdef vector[i64] heads = vector[i64](Q, 0)
    cdef vector[i64] act = vector[i64](Q)
    cdef vector[double] wts = vector[double](Q)
    cdef vector[i64] cts = vector[i64](Q)
    cdef vector[double] cum
    cdef vector[i64] idx
    cdef vector[unsigned char] mark

    cdef i64 total = 0, ptr = 0
    cdef i64 t, q, i, m, c, cap, give, size, serve
    cdef double p, u
    cdef bint join

    for q in range(Q):
        phi[q] = gps[q / K, q % K]
        pfrac[q] = pfrac2[q / K, q % K]

    with nogil:
        for t in range(T):
            while ptr < N and day[ptr] == t:
                q = qid_of[ptr]
                p = pfrac[q]
                join = True
                if p >= 1.0:
                    pass
                elif p <= 0.0:
                    join = False
                else:
                    join = _next(&state) < p
                if join:
                    queues[q].push_back(ptr)
                    total += 1
                else:
                    fate[ptr] = 2
                    eday[ptr] = t
                ptr += 1

            cap = cap_arr[t]
            if cap > 0 and total > 0:
                give = cap
                while give > 0:
                    m = 0
                    for q in range(Q):
                        if <i64>queues[q].size() - heads[q] > 0:
                            act[m] = q
                            m += 1
                    if m == 0:
                        break
                    for i in range(m):
                        wts[i] = phi[act[i]]
                    _alloc(&state, give, wts.data(), m, cts.data(), cum)
                    give = 0
                    for i in range(m):
                        c = cts[i]
                        if c == 0:
                            continue
                        q = act[i]
                        size = <i64>queues[q].size() - heads[q]
                        serve = c if c <= size else size
                        give += c - serve
                        if serve > 0:
                            heads[q] = _serve_queue(
                                &state, queues[q], heads[q], serve, rho, t,
                                &fate[0], &eday[0], idx, mark,
                            )
                            heads[q] = _compact(queues[q], heads[q])
                            total -= serve

    return fate_arr, eday_arr
