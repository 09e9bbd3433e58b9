"""Pure-Python branch-and-bound over stop sequences.

Reference implementation of the search in ``_kernel.pyx``; both must
return identical results. Stop events are integer codes: request ``i``
has pickup ``2*i`` and dropoff ``2*i + 1``; station ``s`` is ``2*n + s``.
Children are tried in increasing code order, so complete sequences are
met in lexicographic order and only a strictly cheaper one replaces the
incumbent.

Times carried down the search are earliest arrivals without any waiting
beyond window openings. They are lower bounds on the real timetable, so
every check made with them only discards sequences that are infeasible.
A complete sequence is accepted only after ``earliest_feasible`` finds a
timetable for it, which may hold the vehicle back to shorten a ride.
"""

INF = float("inf")


def earliest_feasible(legs, lo, hi, pairs, tmax):
    """Componentwise earliest times for one stop sequence, or None.

    ``legs[j]`` is the travel time into stop ``j`` (``legs[0]`` unused),
    ``lo``/``hi`` bound each stop's time (stop 0 is pinned by lo == hi),
    and ``pairs`` holds (pickup stop, dropoff stop, ride limit). Waiting
    is allowed anywhere; a ride limit pushes its pickup later until the
    times settle, which takes at most one round per stop when feasible.
    """
    m = len(legs)
    t = [0.0] * m
    for _ in range(m + 1):
        for j in range(m):
            x = lo[j] if j == 0 else t[j - 1] + legs[j]
            if x < lo[j]:
                x = lo[j]
            if x < t[j]:
                x = t[j]
            if x > hi[j]:
                return None
            t[j] = x
        if t[m - 1] > tmax:
            return None
        moved = False
        for p, d, r in pairs:
            need = t[d] - r
            if need > t[p]:
                if need > hi[p]:
                    return None
                t[p] = need
                moved = True
        if not moved:
            return t
    return None


def solve(start, t0, tmax, capacity, load0, pick, drop, onboard, earliest, latest,
          ride, seats, stations, cost, time, prune=True):
    cost = cost.tolist() if hasattr(cost, "tolist") else cost
    time = time.tolist() if hasattr(time, "tolist") else time
    n = len(pick)
    two_n = 2 * n
    status = [1 if onboard[i] else 0 for i in range(n)]
    # latest moment each request can still be picked up; on-board riders boarded at t0
    pick_hi = [t0 if onboard[i] else latest[i] for i in range(n)]
    pick_w = [0.0] * n  # travel clock at pickup
    remaining0 = sum(1 if onboard[i] else 2 for i in range(n))

    nearest = []
    for row in cost:
        reach = [row[s] for s in stations if row[s] >= 0]
        nearest.append(min(reach) if reach else -1)

    best_cost = [None]
    best_seq = [None]
    seq = []

    def exact(sv):
        """Timetable check of the current sequence closed at local vertex ``sv``."""
        legs, lo, hi = [0.0], [t0], [t0]
        where = {}
        pairs = []
        cur = start
        for code in seq:
            i = code >> 1
            v = drop[i] if code & 1 else pick[i]
            legs.append(time[cur][v])
            cur = v
            if code & 1:
                lo.append(-INF)
                hi.append(INF)
                pairs.append((where.get(i, 0), len(legs) - 1, ride[i]))
            else:
                lo.append(earliest[i])
                hi.append(latest[i])
                where[i] = len(legs) - 1
        legs.append(time[cur][sv])
        lo.append(-INF)
        hi.append(INF)
        return earliest_feasible(legs, lo, hi, pairs, tmax) is not None

    def dfs(cur, t, w, load, c, remaining):
        if remaining == 0:
            crow = cost[cur]
            trow = time[cur]
            for s_idx, sv in enumerate(stations):
                cc = crow[sv]
                if cc < 0:
                    continue
                if t + trow[sv] > tmax:
                    continue
                total = c + cc
                if (best_cost[0] is None or total < best_cost[0]) and exact(sv):
                    best_cost[0] = total
                    best_seq[0] = seq + [two_n + s_idx]
            return
        if prune:
            nb = nearest[cur]
            if nb < 0:
                return
            if best_cost[0] is not None and c + nb >= best_cost[0]:
                return
        for i in range(n):
            st = status[i]
            if st == 0:
                if latest[i] < t:
                    return
            elif st == 1:
                if t - pick_hi[i] > ride[i] or w - pick_w[i] > ride[i]:
                    return
        crow = cost[cur]
        trow = time[cur]
        for code in range(two_n):
            i = code >> 1
            if code & 1 == 0:
                if status[i] != 0:
                    continue
                v = pick[i]
                cc = crow[v]
                if cc < 0:
                    continue
                arr = t + trow[v]
                at = arr if arr >= earliest[i] else earliest[i]
                if at > latest[i] or at > tmax:
                    continue
                if load + seats[i] > capacity:
                    continue
                status[i] = 1
                pick_w[i] = w + trow[v]
                seq.append(code)
                dfs(v, at, w + trow[v], load + seats[i], c + cc, remaining - 1)
                seq.pop()
                status[i] = 0
            else:
                if status[i] != 1:
                    continue
                v = drop[i]
                cc = crow[v]
                if cc < 0:
                    continue
                arr = t + trow[v]
                if arr > tmax:
                    continue
                # a ride lasts at least its travel time and cannot start after the pickup deadline
                if arr - pick_hi[i] > ride[i] or w + trow[v] - pick_w[i] > ride[i]:
                    continue
                status[i] = 2
                seq.append(code)
                dfs(v, arr, w + trow[v], load - seats[i], c + cc, remaining - 1)
                seq.pop()
                status[i] = 1

    if t0 <= tmax and load0 <= capacity:
        dfs(start, t0, 0.0, load0, 0, remaining0)
    if best_cost[0] is None:
        return None
    return best_cost[0], best_seq[0]
