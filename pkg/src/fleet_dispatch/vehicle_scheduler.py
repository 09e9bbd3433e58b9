"""Exact single-vehicle scheduling: cheapest route that serves every given
request and ends, empty, at a refuel station."""
from __future__ import annotations

import os
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from . import kernel
from ._kernel_py import INF, earliest_feasible
from .domain import Request, Schedule, Stop, Vehicle, lower, upper
from .errors import InfeasibleRouteError, InputError
from .network import ReducedNetwork
from .validate import check_schedule

# re-check every solver result with the independent validator (used by the test suite)
VALIDATE = os.environ.get("FLEET_DISPATCH_VALIDATE") == "1"


class Event(NamedTuple):
    kind: str  # start | pickup | dropoff | refuel | pass
    vertex: object
    request: str | None = None


StopSequence = tuple  # of Event


def settle_times(seq, k: Vehicle, rn: ReducedNetwork, reqs: Mapping[str, Request]):
    """Earliest feasible timetable for ``seq``, or None if it breaks a limit.

    The vehicle may wait at any stop. Each time is the earliest it can be
    given the windows, ride limits and shift end, so holding back before a
    pickup is used only when a later ride limit needs it.
    """
    if not seq or seq[0].kind != "start":
        raise InputError("stop sequence must begin with the start event")
    legs, lo, hi = [0.0], [k.ready_time], [k.ready_time]
    where: dict = {}
    pairs = []
    for n in range(1, len(seq)):
        ev = seq[n]
        try:
            legs.append(rn.leg(seq[n - 1].vertex, ev.vertex).time)
        except InfeasibleRouteError:
            return None
        if ev.kind == "pickup":
            r = reqs[ev.request]
            lo.append(lower(r.earliest))
            hi.append(upper(r.latest))
            where[ev.request] = n
            continue
        lo.append(-INF)
        hi.append(INF)
        if ev.kind == "dropoff":
            r = reqs[ev.request]
            pairs.append((where.get(ev.request, 0), n, upper(r.max_ride)))
    times = earliest_feasible(legs, lo, hi, pairs, k.max_time)
    if times is None or times[0] > k.max_time:
        return None
    return times


def settle_occupancy(seq, reqs: Mapping[str, Request], capacity: int, initial: int = 0):
    """Seats taken after each event, or None if capacity is ever exceeded."""
    load = initial
    out = []
    for ev in seq:
        if ev.kind == "pickup":
            load += reqs[ev.request].seats
        elif ev.kind == "dropoff":
            load -= reqs[ev.request].seats
        if load < 0 or load > capacity:
            return None
        out.append(load)
    return out


def _decode(codes, k: Vehicle, ordered: list[Request], stations) -> StopSequence:
    n = len(ordered)
    seq = [Event("start", k.location)]
    for code in codes:
        if code >= 2 * n:
            seq.append(Event("refuel", stations[code - 2 * n]))
        else:
            r = ordered[code >> 1]
            if code & 1:
                seq.append(Event("dropoff", r.dropoff, r.id))
            else:
                seq.append(Event("pickup", r.pickup, r.id))
    return tuple(seq)


def build_schedule(seq, k: Vehicle, rn: ReducedNetwork, reqs: Mapping[str, Request]) -> Schedule | None:
    """Turn a stop sequence into a settled Schedule (None if infeasible)."""
    times = settle_times(seq, k, rn, reqs)
    if times is None:
        return None
    initial = sum(reqs[rid].seats for rid in k.in_service if rid in reqs)
    occ = settle_occupancy(seq, reqs, k.capacity, initial)
    if occ is None:
        return None
    cost = sum(rn.leg(a.vertex, b.vertex).cost_units for a, b in zip(seq, seq[1:]))
    stops = tuple(Stop(ev.vertex, t, f, ev.kind, ev.request) for ev, t, f in zip(seq, times, occ))
    return Schedule(k.id, stops, cost)


def solve_vehicle(k: Vehicle, reqs: Iterable[Request], rn: ReducedNetwork, *,
                  prune: bool = True, backend: str | None = None) -> Schedule | None:
    """Minimum-cost schedule for ``k`` serving all of ``reqs``.

    ``reqs`` must contain the vehicle's in-service requests, already
    normalized to start at ``k.location``. Returns None when no feasible
    schedule exists; an empty request set gives the empty schedule.
    """
    ordered = sorted(reqs, key=lambda r: r.id)
    by_id = {r.id: r for r in ordered}
    if len(by_id) != len(ordered):
        raise InputError("duplicate request ids")
    missing = k.in_service - by_id.keys()
    if missing:
        raise InputError(f"in-service requests {sorted(missing)} of vehicle {k.id} not supplied")
    if not ordered:
        return Schedule(k.id)

    onboard = [r.id in k.in_service for r in ordered]
    local: dict = {}
    for v in [k.location, *(r.pickup for r in ordered), *(r.dropoff for r in ordered), *rn.stations]:
        if v not in rn.index:
            raise InputError(f"vertex {v!r} is not a key vertex of the reduced network")
        local.setdefault(v, len(local))
    idx = [rn.index[v] for v in local]
    grid = np.ix_(idx, idx)
    cost = np.ascontiguousarray(rn.cost_matrix[grid])
    time = np.ascontiguousarray(rn.time_matrix[grid])

    load0 = sum(r.seats for r, on in zip(ordered, onboard) if on)
    res = kernel.get(backend)(
        local[k.location],
        float(k.ready_time),
        float(k.max_time),
        int(k.capacity),
        load0,
        [local[r.pickup] for r in ordered],
        [local[r.dropoff] for r in ordered],
        onboard,
        [lower(r.earliest) for r in ordered],
        [upper(r.latest) for r in ordered],
        [upper(r.max_ride) for r in ordered],
        [r.seats for r in ordered],
        [local[s] for s in rn.stations],
        cost,
        time,
        prune,
    )
    if res is None:
        return None
    total, codes = res
    seq = _decode(codes, k, ordered, rn.stations)
    sched = build_schedule(seq, k, rn, by_id)
    if sched is None or sched.cost_units != total:
        raise AssertionError("search result does not re-settle consistently")
    if VALIDATE:
        check_schedule(sched, k, by_id, rn)
    return sched
