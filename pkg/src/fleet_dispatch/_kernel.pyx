# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled branch-and-bound over stop sequences.

Same search, same operation order, same floating-point arithmetic as
``_kernel_py.solve``; see that module for the event-code convention.
"""
from libc.stdint cimport int64_t
from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc

import numpy as np


cdef struct Search:
    int n
    int m
    int n_st
    double tmax
    int capacity
    bint prune
    const int64_t* cost
    const double* time
    const int* pick
    const int* drop
    const double* earliest
    const double* latest
    const double* ride
    const int* seats
    const int* stations
    int64_t* nearest
    int start
    double t0
    int* status
    double* pick_hi
    double* pick_w
    # scratch for the timetable check of a complete sequence
    double* legs
    double* lo
    double* hi
    double* tt
    int* where
    int* pp
    int* pd
    double* pr
    int* seq
    int depth
    bint found
    int64_t best_cost
    int* best_seq


cdef bint _earliest_feasible(Search* s, int m, int n_pairs) noexcept nogil:
    cdef int it, j, k, p, d
    cdef double x, need
    cdef bint moved
    cdef double* t = s.tt
    for j in range(m):
        t[j] = 0.0
    for it in range(m + 1):
        for j in range(m):
            x = s.lo[j] if j == 0 else t[j - 1] + s.legs[j]
            if x < s.lo[j]:
                x = s.lo[j]
            if x < t[j]:
                x = t[j]
            if x > s.hi[j]:
                return False
            t[j] = x
        if t[m - 1] > s.tmax:
            return False
        moved = False
        for k in range(n_pairs):
            p = s.pp[k]
            d = s.pd[k]
            need = t[d] - s.pr[k]
            if need > t[p]:
                if need > s.hi[p]:
                    return False
                t[p] = need
                moved = True
        if not moved:
            return True
    return False


cdef bint _exact(Search* s, int sv) noexcept nogil:
    cdef int j, code, i, v, m = 1, n_pairs = 0
    cdef int cur = s.start
    s.legs[0] = 0.0
    s.lo[0] = s.t0
    s.hi[0] = s.t0
    for i in range(s.n):
        s.where[i] = 0
    for j in range(s.depth):
        code = s.seq[j]
        i = code >> 1
        v = s.drop[i] if code & 1 else s.pick[i]
        s.legs[m] = s.time[cur * s.m + v]
        cur = v
        if code & 1:
            s.lo[m] = -INFINITY
            s.hi[m] = INFINITY
            s.pp[n_pairs] = s.where[i]
            s.pd[n_pairs] = m
            s.pr[n_pairs] = s.ride[i]
            n_pairs += 1
        else:
            s.lo[m] = s.earliest[i]
            s.hi[m] = s.latest[i]
            s.where[i] = m
        m += 1
    s.legs[m] = s.time[cur * s.m + sv]
    s.lo[m] = -INFINITY
    s.hi[m] = INFINITY
    m += 1
    return _earliest_feasible(s, m, n_pairs)


cdef void _dfs(Search* s, int cur, double t, double w, int load, int64_t c, int remaining) noexcept nogil:
    cdef int i, code, v, s_idx, sv, st
    cdef int64_t cc, total, nb
    cdef double arr, at
    cdef const int64_t* crow = s.cost + cur * s.m
    cdef const double* trow = s.time + cur * s.m
    if remaining == 0:
        for s_idx in range(s.n_st):
            sv = s.stations[s_idx]
            cc = crow[sv]
            if cc < 0:
                continue
            if t + trow[sv] > s.tmax:
                continue
            total = c + cc
            if (not s.found or total < s.best_cost) and _exact(s, sv):
                s.found = True
                s.best_cost = total
                for i in range(s.depth):
                    s.best_seq[i] = s.seq[i]
                s.best_seq[s.depth] = 2 * s.n + s_idx
        return
    if s.prune:
        nb = s.nearest[cur]
        if nb < 0:
            return
        if s.found and c + nb >= s.best_cost:
            return
    for i in range(s.n):
        st = s.status[i]
        if st == 0:
            if s.latest[i] < t:
                return
        elif st == 1:
            if t - s.pick_hi[i] > s.ride[i] or w - s.pick_w[i] > s.ride[i]:
                return
    for code in range(2 * s.n):
        i = code >> 1
        if code & 1 == 0:
            if s.status[i] != 0:
                continue
            v = s.pick[i]
            cc = crow[v]
            if cc < 0:
                continue
            arr = t + trow[v]
            at = arr if arr >= s.earliest[i] else s.earliest[i]
            if at > s.latest[i] or at > s.tmax:
                continue
            if load + s.seats[i] > s.capacity:
                continue
            s.status[i] = 1
            s.pick_w[i] = w + trow[v]
            s.seq[s.depth] = code
            s.depth += 1
            _dfs(s, v, at, w + trow[v], load + s.seats[i], c + cc, remaining - 1)
            s.depth -= 1
            s.status[i] = 0
        else:
            if s.status[i] != 1:
                continue
            v = s.drop[i]
            cc = crow[v]
            if cc < 0:
                continue
            arr = t + trow[v]
            if arr > s.tmax:
                continue
            if arr - s.pick_hi[i] > s.ride[i] or w + trow[v] - s.pick_w[i] > s.ride[i]:
                continue
            s.status[i] = 2
            s.seq[s.depth] = code
            s.depth += 1
            _dfs(s, v, arr, w + trow[v], load - s.seats[i], c + cc, remaining - 1)
            s.depth -= 1
            s.status[i] = 1


cdef void _release(Search* s) noexcept:
    free(s.nearest); free(s.status); free(s.pick_hi); free(s.pick_w); free(s.seq); free(s.best_seq)
    free(s.legs); free(s.lo); free(s.hi); free(s.tt); free(s.where); free(s.pp); free(s.pd); free(s.pr)


def solve(int start, double t0, double tmax, int capacity, int load0, pick, drop, onboard,
          earliest, latest, ride, seats, stations, cost, time, bint prune=True):
    cdef int n = len(pick)
    cdef int n_st = len(stations)
    cdef int i, j, remaining = 0
    cdef int64_t best_near, x
    cdef Search s

    cost_a = np.ascontiguousarray(cost, dtype=np.int64)
    time_a = np.ascontiguousarray(time, dtype=np.float64)
    cdef const int64_t[:, ::1] cost_v = cost_a
    cdef const double[:, ::1] time_v = time_a
    cdef int m = cost_v.shape[0]

    pick_a = np.ascontiguousarray(pick, dtype=np.intc)
    drop_a = np.ascontiguousarray(drop, dtype=np.intc)
    seats_a = np.ascontiguousarray(seats, dtype=np.intc)
    st_a = np.ascontiguousarray(stations, dtype=np.intc)
    e_a = np.ascontiguousarray(earliest, dtype=np.float64)
    l_a = np.ascontiguousarray(latest, dtype=np.float64)
    r_a = np.ascontiguousarray(ride, dtype=np.float64)
    cdef const int[::1] pick_v = pick_a
    cdef const int[::1] drop_v = drop_a
    cdef const int[::1] seats_v = seats_a
    cdef const int[::1] st_v = st_a
    cdef const double[::1] e_v = e_a
    cdef const double[::1] l_v = l_a
    cdef const double[::1] r_v = r_a

    s.n = n
    s.m = m
    s.n_st = n_st
    s.tmax = tmax
    s.capacity = capacity
    s.prune = prune
    s.cost = &cost_v[0, 0]
    s.time = &time_v[0, 0]
    s.pick = &pick_v[0] if n else NULL
    s.drop = &drop_v[0] if n else NULL
    s.seats = &seats_v[0] if n else NULL
    s.earliest = &e_v[0] if n else NULL
    s.latest = &l_v[0] if n else NULL
    s.ride = &r_v[0] if n else NULL
    s.stations = &st_v[0] if n_st else NULL
    s.start = start
    s.t0 = t0
    s.depth = 0
    s.found = False
    s.best_cost = 0

    s.nearest = <int64_t*> malloc(m * sizeof(int64_t))
    s.status = <int*> malloc((n + 1) * sizeof(int))
    s.pick_hi = <double*> malloc((n + 1) * sizeof(double))
    s.pick_w = <double*> malloc((n + 1) * sizeof(double))
    s.seq = <int*> malloc((2 * n + 2) * sizeof(int))
    s.best_seq = <int*> malloc((2 * n + 2) * sizeof(int))
    s.legs = <double*> malloc((2 * n + 2) * sizeof(double))
    s.lo = <double*> malloc((2 * n + 2) * sizeof(double))
    s.hi = <double*> malloc((2 * n + 2) * sizeof(double))
    s.tt = <double*> malloc((2 * n + 2) * sizeof(double))
    s.where = <int*> malloc((n + 1) * sizeof(int))
    s.pp = <int*> malloc((n + 1) * sizeof(int))
    s.pd = <int*> malloc((n + 1) * sizeof(int))
    s.pr = <double*> malloc((n + 1) * sizeof(double))
    if not (s.nearest and s.status and s.pick_hi and s.pick_w and s.seq and s.best_seq and s.legs
            and s.lo and s.hi and s.tt and s.where and s.pp and s.pd and s.pr):
        _release(&s)
        raise MemoryError()
    try:
        for i in range(m):
            best_near = -1
            for j in range(n_st):
                x = s.cost[i * m + s.stations[j]]
                if x >= 0 and (best_near < 0 or x < best_near):
                    best_near = x
            s.nearest[i] = best_near
        for i in range(n):
            if onboard[i]:
                s.status[i] = 1
                s.pick_hi[i] = t0
                remaining += 1
            else:
                s.status[i] = 0
                s.pick_hi[i] = s.latest[i]
                remaining += 2
            s.pick_w[i] = 0.0
        if t0 <= tmax and load0 <= capacity:
            with nogil:
                _dfs(&s, start, t0, 0.0, load0, 0, remaining)
        if not s.found:
            return None
        return int(s.best_cost), [s.best_seq[i] for i in range(remaining + 1)]
    finally:
        _release(&s)
