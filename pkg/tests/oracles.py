"""Exhaustive reference solvers, written independently of the package's search code.

Everything here enumerates plain permutations; nothing is pruned.
"""
import itertools
import math

from fleet_dispatch.domain import cost_cents


def _events(k, reqs):
    """(code, kind, vertex, rid) events, coded like the solver (pickup 2i, dropoff 2i+1)."""
    ordered = sorted(reqs, key=lambda r: r.id)
    out = []
    for i, r in enumerate(ordered):
        if r.id not in k.in_service:
            out.append((2 * i, "pickup", r.pickup, r.id))
        out.append((2 * i + 1, "dropoff", r.dropoff, r.id))
    return out, len(ordered)


def settle(route, k, rn, reqs):
    """Timetable check by longest paths over difference constraints.

    ``route`` is (kind, vertex, rid) after the start. Node 0 is the start,
    pinned at the ready time; waiting is allowed at every stop. Lower limits
    are arcs u -> v of weight w meaning t_v >= t_u + w, and upper limits are
    arcs back into node 0. The constraints are satisfiable iff Bellman-Ford
    from node 0 never lifts node 0 itself. Returns total cost units or None.
    """
    t0 = k.ready_time
    load = sum(reqs[rid].seats for rid in k.in_service if rid in reqs)
    if load > k.capacity or t0 > k.max_time:
        return None
    arcs = []
    node_of = {rid: 0 for rid in k.in_service}
    at = k.location
    cost = 0
    for n, (kind, v, rid) in enumerate(route, start=1):
        if v != at:
            if (at, v) not in rn.pair_data:
                return None
            leg = rn.pair_data[(at, v)]
            arcs.append((n - 1, n, leg.time))
            cost += leg.cost_units
        else:
            arcs.append((n - 1, n, 0.0))
        at = v
        arcs.append((n, 0, t0 - k.max_time))
        if kind == "pickup":
            r = reqs[rid]
            if r.earliest is not None:
                arcs.append((0, n, r.earliest - t0))
            if r.latest is not None:
                arcs.append((n, 0, t0 - r.latest))
            node_of[rid] = n
            load += r.seats
        elif kind == "dropoff":
            r = reqs[rid]
            if rid not in node_of:
                return None
            if r.max_ride is not None:
                arcs.append((n, node_of[rid], -r.max_ride))
            load -= r.seats
        if load > k.capacity:
            return None
    if load != 0:
        return None
    size = len(route) + 1
    dist = [-math.inf] * size
    dist[0] = t0
    for _ in range(size + 1):
        changed = False
        for u, v, w in arcs:
            if dist[u] + w > dist[v] + 1e-9:
                dist[v] = dist[u] + w
                changed = True
        if dist[0] > t0 + 1e-9:
            return None
        if not changed:
            return cost
    return None


def enumerate_vehicle(k, reqs, rn):
    """(cost units, code sequence) of the cheapest schedule, ties to the smallest codes."""
    reqs = list(reqs)
    if not reqs:
        return 0, ()
    rmap = {r.id: r for r in reqs}
    events, n = _events(k, reqs)
    stations = sorted(rn.stations)
    best = None
    for perm in itertools.permutations(events):
        seen = set()
        ok = True
        for code, kind, _, rid in perm:
            if kind == "pickup":
                seen.add(rid)
            elif rid not in seen and rid not in k.in_service:
                ok = False
                break
        if not ok:
            continue
        route = [(kind, v, rid) for _, kind, v, rid in perm]
        for s_idx, st in enumerate(stations):
            cost = settle(route + [("refuel", st, None)], k, rn, rmap)
            if cost is None:
                continue
            codes = tuple(c for c, *_ in perm) + (2 * n + s_idx,)
            if best is None or (cost, codes) < best:
                best = (cost, codes)
    return best


def joint_fleet(requests, vehicles, rn, cents_per_mile):
    """Monolithic search over joint routes of the whole fleet.

    Every ordering of all events, cut into one route per vehicle, is tried
    directly; no assignment is ever formed. Returns (total cents, total units)
    or None. Meant for at most 2 vehicles and 3 requests.
    """
    vehicles = sorted(vehicles, key=lambda k: k.id)
    rmap = {r.id: r for r in requests}
    events = []
    for r in sorted(requests, key=lambda r: r.id):
        events.append(("pickup", r.pickup, r.id))
        events.append(("dropoff", r.dropoff, r.id))
    cut = ("|", None, None)
    tokens = events + [cut] * (len(vehicles) - 1)
    best = None
    memo = {}
    for perm in set(itertools.permutations(tokens)):
        routes, cur = [], []
        for tok in perm:
            if tok is cut:
                routes.append(tuple(cur))
                cur = []
            else:
                cur.append(tok)
        routes.append(tuple(cur))
        valid = True
        for route in routes:
            seen = set()
            for kind, _, rid in route:
                if kind == "pickup":
                    seen.add(rid)
                elif rid not in seen:
                    valid = False
            if not valid:
                break
        if not valid:
            continue
        cents = units = 0
        for k, route in zip(vehicles, routes):
            if not route:
                continue
            key = (k.id, route)
            if key not in memo:
                costs = [settle(list(route) + [("refuel", st, None)], k, rn, rmap) for st in sorted(rn.stations)]
                costs = [c for c in costs if c is not None]
                memo[key] = min(costs) if costs else None
            u = memo[key]
            if u is None:
                cents = math.inf
                break
            cents += cost_cents(u, cents_per_mile)
            units += u
        if cents == math.inf:
            continue
        if best is None or (cents, units) < best:
            best = (cents, units)
    return best


def simple_paths(net, i, j):
    """Every simple path i -> j as (cost units, vertex tuple)."""
    from fleet_dispatch.network import to_units
    out = []
    adj = {}
    for e in net.edges:
        adj.setdefault(e.i, []).append((e.j, to_units(e.cost)))

    def walk(v, path, cost):
        if v == j:
            out.append((cost, tuple(path)))
            return
        for w, c in adj.get(v, ()):
            if w not in path:
                path.append(w)
                walk(w, path, cost + c)
                path.pop()

    walk(i, [i], 0)
    return out
