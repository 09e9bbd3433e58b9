"""Stand-alone schedule checker.

Recomputes every invariant from the raw request, vehicle, and network data
without touching the solver's settlement code, so solver bugs cannot hide
behind their own bookkeeping.
"""
from __future__ import annotations

from typing import Mapping

from .domain import Request, Schedule, Vehicle
from .network import ReducedNetwork, RoadNetwork, reduce

EPS = 1e-9


def schedule_violations(sched: Schedule, k: Vehicle, served: Mapping[str, Request],
                        rn: ReducedNetwork) -> list[str]:
    """All invariant violations of ``sched`` (empty list when valid).

    ``served`` holds exactly the requests the schedule must serve; on-board
    requests should be the normalized ones the schedule was built from.
    """
    out: list[str] = []
    stops = sched.stops
    if sched.vehicle_id != k.id:
        out.append(f"schedule is for {sched.vehicle_id}, not {k.id}")
    if not stops:
        if served:
            out.append(f"empty schedule but {len(served)} requests to serve")
        if sched.cost_units != 0:
            out.append("empty schedule with nonzero cost")
        return out

    first = stops[0]
    if first.kind != "start" or first.vertex != k.location:
        out.append("schedule does not start at the vehicle location")
    if first.time < k.ready_time - EPS:
        out.append("first stop before the vehicle is ready")

    onboard = {rid for rid in k.in_service}
    load = sum(served[rid].seats for rid in onboard if rid in served)
    picked_at: dict = {rid: first.time for rid in onboard}
    dropped: set = set()
    cost = 0
    for n, s in enumerate(stops):
        if n > 0:
            prev = stops[n - 1]
            if not rn.has(prev.vertex, s.vertex):
                out.append(f"stop {n}: no path {prev.vertex!r} -> {s.vertex!r}")
            else:
                leg = rn.leg(prev.vertex, s.vertex)
                cost += leg.cost_units
                if s.time < prev.time + leg.time - EPS:
                    out.append(f"stop {n}: arrives faster than the leg travel time")
            if s.kind == "start":
                out.append(f"stop {n}: repeated start")
        if s.time > k.max_time + EPS:
            out.append(f"stop {n}: beyond the operating-time limit")
        if s.kind == "pickup":
            r = served.get(s.request)
            if r is None:
                out.append(f"stop {n}: pickup of unexpected request {s.request}")
                continue
            if s.request in picked_at:
                out.append(f"stop {n}: request {s.request} picked up twice")
            if s.vertex != r.pickup:
                out.append(f"stop {n}: pickup of {r.id} at the wrong vertex")
            if r.earliest is not None and s.time < r.earliest - EPS:
                out.append(f"stop {n}: pickup of {r.id} before its window")
            if r.latest is not None and s.time > r.latest + EPS:
                out.append(f"stop {n}: pickup of {r.id} after its window")
            picked_at[s.request] = s.time
            load += r.seats
        elif s.kind == "dropoff":
            r = served.get(s.request)
            if r is None:
                out.append(f"stop {n}: dropoff of unexpected request {s.request}")
                continue
            if s.request not in picked_at:
                out.append(f"stop {n}: dropoff of {r.id} before pickup")
                continue
            if s.request in dropped:
                out.append(f"stop {n}: request {r.id} dropped twice")
            if s.vertex != r.dropoff:
                out.append(f"stop {n}: dropoff of {r.id} at the wrong vertex")
            if r.max_ride is not None and s.time - picked_at[s.request] > r.max_ride + EPS:
                out.append(f"stop {n}: ride time of {r.id} exceeded")
            dropped.add(s.request)
            load -= r.seats
        elif s.kind == "refuel":
            if n != len(stops) - 1:
                out.append(f"stop {n}: refuel before the end of the route")
            if s.vertex not in rn.stations:
                out.append(f"stop {n}: route ends at non-station {s.vertex!r}")
        elif s.kind not in ("start", "pass"):
            out.append(f"stop {n}: unknown stop kind {s.kind!r}")
        if s.occupancy != load:
            out.append(f"stop {n}: recorded occupancy {s.occupancy} != {load}")
        if load < 0 or load > k.capacity:
            out.append(f"stop {n}: occupancy {load} outside [0, {k.capacity}]")

    if stops[-1].kind != "refuel":
        out.append("route does not end at a refuel station")
    if load != 0:
        out.append("passengers still on board at the end of the route")
    unserved = set(served) - dropped
    if unserved:
        out.append(f"requests never served: {sorted(unserved)}")
    if cost != sched.cost_units:
        out.append(f"recorded cost {sched.cost_units} != leg sum {cost}")
    return out


def check_schedule(sched: Schedule, k: Vehicle, served: Mapping[str, Request], rn: ReducedNetwork) -> None:
    problems = schedule_violations(sched, k, served, rn)
    if problems:
        raise AssertionError(f"invalid schedule for {k.id}: " + "; ".join(problems))


def report_violations(schedule: dict, vehicle: dict, served: dict, network: RoadNetwork) -> list[str]:
    """Validate one schedule as read back from a JSON report."""
    sched = Schedule.from_dict(schedule)
    k = Vehicle.from_dict(vehicle)
    reqs = {rid: Request.from_dict(r) for rid, r in served.items()}
    keys = {k.location} | {s.vertex for s in sched.stops}
    keys |= {v for r in reqs.values() for v in (r.pickup, r.dropoff)}
    return schedule_violations(sched, k, reqs, reduce(network, keys))
