"""Interval-by-interval operation of the fleet.

Each interval merges new requests into the carried-over pool, prices the
pool with admission control, commits the winning schedules and then drives
every vehicle along its committed timetable up to the next dispatch time.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .admission import INFEASIBLE, AdmissionProblem, GAConfig, revenue, run_admission
from .domain import (Request, RequestState, Schedule, Stop, Vehicle, normalize_in_service,
                     split_oversized)
from .errors import ConstraintViolation, InputError
from .fleet import Coordinator, build_tabu_lists, globally_inadmissible
from .network import RoadNetwork, reduce
from .scenario import Scenario
from .validate import check_schedule
from .vehicle_scheduler import solve_vehicle

TERMINAL = (RequestState.COMPLETED, RequestState.COMPLETED_UNSERVED, RequestState.REJECTED)


@dataclass(frozen=True)
class SimConfig:
    interval_seconds: float = 180.0
    ga: GAConfig = field(default_factory=GAConfig)
    cents_per_mile: int = 16
    discount: float = 0.5
    full_operation_time: float = 10800.0
    mode: str = "cumulative"
    workers: int = 1


@dataclass(frozen=True)
class Commitment:
    """A dispatched schedule plus what it was computed from."""

    schedule: Schedule
    vehicle: Vehicle  # snapshot at dispatch time
    served: dict  # request id -> Request as scheduled
    rn: object

    def check(self):
        check_schedule(self.schedule, self.vehicle, self.served, self.rn)


@dataclass
class Ledger:
    revenue: int = 0
    cost: int = 0
    admitted: int = 0

    @property
    def profit(self) -> int:
        return self.revenue - self.cost


@dataclass
class SystemState:
    clock: float
    network: RoadNetwork
    vehicles: dict  # id -> Vehicle
    requests: dict = field(default_factory=dict)  # id -> Request as submitted (seats may shrink)
    status: dict = field(default_factory=dict)  # id -> RequestState
    pickup_times: dict = field(default_factory=dict)
    pending: set = field(default_factory=set)  # new and carried-over ids
    commitments: dict = field(default_factory=dict)  # vehicle id -> Commitment
    compensated: set = field(default_factory=set)
    booked: dict = field(default_factory=dict)  # id -> revenue booked at admission
    ledger: Ledger = field(default_factory=Ledger)
    interval: int = 0
    config: SimConfig = field(default_factory=SimConfig)

    def copy(self) -> "SystemState":
        return replace(
            self,
            vehicles=dict(self.vehicles),
            requests=dict(self.requests),
            status=dict(self.status),
            pickup_times=dict(self.pickup_times),
            pending=set(self.pending),
            commitments=dict(self.commitments),
            compensated=set(self.compensated),
            booked=dict(self.booked),
            ledger=replace(self.ledger),
        )

    def ids_in(self, *states) -> list:
        return sorted(rid for rid, s in self.status.items() if s in states)


@dataclass
class IntervalReport:
    index: int
    clock: float
    admitted: tuple  # every request admitted this round, including earlier commitments
    newly_admitted: tuple
    carried: tuple
    excluded: tuple
    interval_profit: int
    cumulative_profit: int
    revenue: int
    cost: int
    schedules: dict
    trace: list
    commitments: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "interval": self.index,
            "clock": self.clock,
            "admitted": list(self.admitted),
            "newly_admitted": list(self.newly_admitted),
            "carried": list(self.carried),
            "excluded": list(self.excluded),
            "interval_profit_cents": self.interval_profit,
            "cumulative_profit_cents": self.cumulative_profit,
            "cumulative_revenue_cents": self.revenue,
            "cumulative_cost_cents": self.cost,
            "schedules": {k: s.to_dict() for k, s in sorted(self.schedules.items())},
            # what each schedule was computed from, so a report can be re-validated on its own
            "dispatch": {vid: {"vehicle": c.vehicle.to_dict(),
                               "served": {rid: r.to_dict() for rid, r in sorted(c.served.items())}}
                         for vid, c in sorted(self.commitments.items())},
            "trace": [list(t) for t in self.trace],
        }


def initial_state(sc: Scenario, mode: str = "cumulative", workers: int = 1) -> SystemState:
    cfg = SimConfig(sc.interval_seconds, sc.ga, sc.fuel_cents_per_mile, sc.discount,
                    sc.full_operation_time, mode, workers)
    clock = sc.interval_seconds
    vehicles = {}
    for k in sc.vehicles:
        if k.in_service or k.assigned_unserved:
            raise InputError("scenario vehicles must start empty")
        ready = max(k.ready_time, clock)
        vehicles[k.id] = replace(k, ready_time=ready, max_time=k.max_time + ready - k.ready_time)
    return SystemState(clock=clock, network=sc.network, vehicles=vehicles, config=cfg)


def _normalized(state: SystemState, k: Vehicle, rid: str) -> Request:
    r = state.requests[rid]
    if rid in state.compensated:
        r = replace(r, max_ride=None)
    try:
        return normalize_in_service(r, k, k.ready_time - state.pickup_times[rid])
    except ConstraintViolation:
        # ride limit met exactly at the next vertex; the passenger is compensated instead
        state.compensated.add(rid)
        return normalize_in_service(replace(r, max_ride=None), k, 0.0)


def _demote(state: SystemState, rids) -> None:
    """Send admitted-unserved requests back to the pool as new submissions."""
    for rid in rids:
        state.status[rid] = RequestState.NEW
        state.pending.add(rid)
        state.ledger.revenue -= state.booked.pop(rid, 0)
        state.ledger.admitted -= 1
    for vid, k in list(state.vehicles.items()):
        if k.assigned_unserved & set(rids):
            state.vehicles[vid] = replace(k, assigned_unserved=k.assigned_unserved - set(rids))


def run_interval(state: SystemState, arrivals=(), cfg: SimConfig | None = None):
    """One data-collection/duty-assignment cycle; returns (new state, report)."""
    state = state.copy()
    cfg = cfg or state.config
    q_max = max(k.capacity for k in state.vehicles.values())
    for r in arrivals:
        for part in split_oversized(r, q_max):
            if part.id in state.requests:
                raise InputError(f"request {part.id} submitted twice")
            state.requests[part.id] = replace(part, state=RequestState.NEW)
            state.status[part.id] = RequestState.NEW
            state.pending.add(part.id)

    frozen: set = set()
    while True:
        vehicles = [k for vid, k in sorted(state.vehicles.items()) if vid not in frozen]
        pool = {rid: state.requests[rid] for rid in state.pending}
        for k in vehicles:
            for rid in k.assigned_unserved:
                pool[rid] = state.requests[rid]
            for rid in k.in_service:
                pool[rid] = _normalized(state, k, rid)
        keys = {k.location for k in vehicles}
        for r in pool.values():
            keys |= {r.pickup, r.dropoff}
        rn = reduce(state.network, keys)
        # a vehicle that cannot even keep its own commitments gives up its unserved ones,
        # and is left on its current plan if the passengers on board alone are too many
        bad = []
        for k in vehicles:
            onboard = [pool[rid] for rid in sorted(k.in_service)]
            own = [pool[rid] for rid in sorted(k.in_service | k.assigned_unserved)]
            if own and solve_vehicle(k, own, rn) is None:
                bad.append(k)
            elif any(solve_vehicle(k, onboard + [pool[rid]], rn) is None for rid in k.assigned_unserved):
                # pairing would be tabu this interval
                bad.append(k)
        if not bad:
            break
        for k in bad:
            if k.assigned_unserved:
                _demote(state, sorted(k.assigned_unserved))
            else:
                frozen.add(k.id)

    with Coordinator(rn, cfg.mode, cfg.workers) as coord:
        tabu = build_tabu_lists(pool.values(), vehicles, rn, coordinator=coord)
        hopeless = globally_inadmissible(tabu, vehicles) & state.pending
        for rid in hopeless:
            state.status[rid] = RequestState.REJECTED
            state.pending.discard(rid)
            del pool[rid]
        problem = AdmissionProblem(pool.values(), vehicles, rn, tabu=tabu, discount=cfg.discount,
                                   cents_per_mile=cfg.cents_per_mile, coordinator=coord)
        assert problem.fitness(problem.baseline()) is not INFEASIBLE
        ga = replace(cfg.ga, seed=cfg.ga.seed * 1000 + state.interval)
        out = run_admission(None, None, rn, ga, problem=problem)

    newly = tuple(rid for rid in out.admitted if rid in state.pending)
    for rid in newly:
        state.pending.discard(rid)
        state.booked[rid] = revenue(state.requests[rid], cfg.discount)
        state.ledger.revenue += state.booked[rid]
        state.ledger.admitted += 1
    state.ledger.cost += out.total_cost - out.baseline_cost
    for rid in state.pending:
        state.status[rid] = RequestState.CARRIED_OVER

    active = {k.id: k for k in vehicles}
    by_vehicle: dict = {vid: set() for vid in active}
    for rid, vid in out.assignment.items():
        by_vehicle[vid].add(rid)
    for vid, k in active.items():
        unserved = frozenset(by_vehicle[vid] - k.in_service)
        for rid in unserved:
            state.status[rid] = RequestState.ASSIGNED_UNSERVED
        k = replace(k, assigned_unserved=unserved)
        state.vehicles[vid] = k
        sched = out.schedules.get(vid)
        if sched is None:
            state.commitments.pop(vid, None)
        else:
            state.commitments[vid] = Commitment(sched, k, {rid: pool[rid] for rid in by_vehicle[vid]}, rn)
    dispatched = {vid: state.commitments[vid] for vid in sorted(state.commitments)}

    report = IntervalReport(
        index=state.interval,
        clock=state.clock,
        admitted=tuple(sorted(out.admitted)),
        newly_admitted=tuple(sorted(newly)),
        carried=tuple(sorted(state.pending)),
        excluded=tuple(sorted(hopeless)),
        interval_profit=out.marginal_profit,
        cumulative_profit=state.ledger.profit,
        revenue=state.ledger.revenue,
        cost=state.ledger.cost,
        schedules={vid: c.schedule for vid, c in dispatched.items()},
        trace=list(out.trace),
        commitments=dispatched,
    )
    _advance(state, state.clock + cfg.interval_seconds, cfg)
    state.interval += 1
    return state, report


def _timeline(c: Commitment) -> list:
    """Road-level points (vertex, arrive, depart, stop index or None)."""
    stops = c.schedule.stops
    emap = c.rn.network.edge_map
    pts = [(stops[0].vertex, stops[0].time, stops[0].time, 0)]
    for n in range(1, len(stops)):
        prev, s = stops[n - 1], stops[n]
        t = prev.time
        path = c.rn.leg(prev.vertex, s.vertex).path
        for a, b in zip(path[:-1], path[1:-1]):
            t += emap[(a, b)].time
            pts.append((b, t, t, None))
        arrive = min(t + emap[(path[-2], path[-1])].time, s.time) if len(path) > 1 else s.time
        pts.append((s.vertex, arrive, s.time, n))
    return pts


def _advance(state: SystemState, until: float, cfg: SimConfig) -> None:
    """Drive every vehicle along its commitment up to time ``until``."""
    for vid in sorted(state.vehicles):
        k = state.vehicles[vid]
        c = state.commitments.get(vid)
        if c is None:
            ready = max(k.ready_time, until)
            state.vehicles[vid] = replace(k, ready_time=ready, max_time=k.max_time + ready - k.ready_time)
            continue
        in_service, unserved = set(k.in_service), set(k.assigned_unserved)
        for s in c.schedule.stops:
            if s.time > until:
                break
            if s.kind == "pickup":
                state.status[s.request] = RequestState.IN_SERVICE
                state.pickup_times[s.request] = s.time
                unserved.discard(s.request)
                in_service.add(s.request)
            elif s.kind == "dropoff":
                state.status[s.request] = RequestState.COMPLETED
                in_service.discard(s.request)
        pts = _timeline(c)
        nxt = next((j for j, p in enumerate(pts) if p[1] > until), None)
        if nxt is None:
            end = c.schedule.stops[-1]
            ready = max(until, end.time)
            k = replace(k, location=end.vertex, ready_time=ready, max_time=ready + cfg.full_operation_time,
                        in_service=frozenset(), assigned_unserved=frozenset())
            del state.commitments[vid]
        elif nxt == 0:
            k = replace(k, in_service=frozenset(in_service), assigned_unserved=frozenset(unserved))
        else:
            prev = pts[nxt - 1]
            if prev[2] > until:
                loc, ready = prev[0], until
            else:
                loc, ready = pts[nxt][0], pts[nxt][1]
            k = replace(k, location=loc, ready_time=ready,
                        in_service=frozenset(in_service), assigned_unserved=frozenset(unserved))
        state.vehicles[vid] = k
    state.clock = until


def run_horizon(sc: Scenario, mode: str = "cumulative", workers: int = 1) -> list:
    state = initial_state(sc, mode, workers)
    reports = []
    for n in range(sc.horizon):
        state, rep = run_interval(state, sc.arrivals_at(n))
        reports.append(rep)
    return reports


def run_horizon_state(sc: Scenario, mode: str = "cumulative", workers: int = 1) -> tuple:
    """Like run_horizon but also returns the final state."""
    state = initial_state(sc, mode, workers)
    reports = []
    for n in range(sc.horizon):
        state, rep = run_interval(state, sc.arrivals_at(n))
        reports.append(rep)
    return state, reports


def series(reports) -> list:
    """Per-interval rows (interval, admitted, carried, profit, cumulative profit)."""
    return [(r.index, len(r.newly_admitted), len(r.carried), r.interval_profit, r.cumulative_profit)
            for r in reports]


# -- disturbances -----------------------------------------------------------

def _legs_using(c: Commitment, edge) -> list:
    """Indices n such that the leg into stop n traverses ``edge``."""
    out = []
    stops = c.schedule.stops
    for n in range(1, len(stops)):
        path = c.rn.leg(stops[n - 1].vertex, stops[n].vertex).path
        if any((a, b) == edge for a, b in zip(path, path[1:])):
            out.append(n)
    return out


def _remaining(state: SystemState, c: Commitment):
    return [(n, s) for n, s in enumerate(c.schedule.stops) if s.time > state.clock]


def classify_traffic_update(state: SystemState, edge) -> dict:
    """Requests a travel-time change on ``edge`` would touch.

    Returns {"unserved": ids, "in_service": ids}; both empty means the edge
    is not used by any outstanding commitment.
    """
    unserved, onboard = set(), set()
    for vid, c in sorted(state.commitments.items()):
        k = state.vehicles[vid]
        rest = _remaining(state, c)
        if not rest:
            continue
        first = rest[0][0]
        for n in _legs_using(c, edge):
            if n < first:
                continue
            later = {s.request for m, s in rest if m >= n and s.request}
            unserved |= later & k.assigned_unserved
            onboard |= later & k.in_service
    return {"unserved": sorted(unserved), "in_service": sorted(onboard)}


def _release(stops, rid: str, seats: int) -> tuple:
    """Lower the recorded occupancy by ``seats`` from rid's pickup up to its dropoff."""
    out, aboard = [], False
    for s in stops:
        if s.request == rid and s.kind == "pickup":
            aboard = True
        elif s.request == rid and s.kind == "dropoff":
            aboard = False
        out.append(replace(s, occupancy=s.occupancy - seats) if aboard else s)
    return tuple(out)


def _as_pass(c: Commitment, rids) -> Commitment:
    rids = set(rids)
    stops = c.schedule.stops
    for rid in sorted(rids):
        if rid in c.served:
            stops = _release(stops, rid, c.served[rid].seats)
    stops = tuple(replace(s, kind="pass", request=None) if s.request in rids and s.kind in ("pickup", "dropoff")
                  else s for s in stops)
    served = {rid: r for rid, r in c.served.items() if rid not in rids}
    return replace(c, schedule=replace(c.schedule, stops=stops), served=served)


def apply_traffic_update(state: SystemState, edge, new_time: float) -> SystemState:
    """Change one edge's travel time between intervals.

    Unserved requests whose remaining route crosses the edge go back to the
    pool as fresh submissions; passengers already on board keep their
    vehicle and are flagged for compensation.
    """
    i, j = edge
    net = state.network.with_edge_time(i, j, new_time)
    touched = classify_traffic_update(state, (i, j))
    state = state.copy()
    state.network = net
    if touched["unserved"]:
        _demote(state, touched["unserved"])
        for vid, c in list(state.commitments.items()):
            state.commitments[vid] = _as_pass(c, touched["unserved"])
    state.compensated |= set(touched["in_service"])
    return state


def apply_no_show(state: SystemState, rid: str, absent_seats: int) -> SystemState:
    """Release the seats of absent passengers of an admitted, not yet picked-up request."""
    r = state.requests.get(rid)
    if r is None:
        raise InputError(f"unknown request {rid!r}")
    if state.status.get(rid) != RequestState.ASSIGNED_UNSERVED:
        raise InputError(f"request {rid} is not waiting for pickup")
    if not 0 <= absent_seats <= r.seats:
        raise InputError("absent seats must lie between 0 and the request's seats")
    if absent_seats == 0:
        return state
    state = state.copy()
    vid = next(v for v, k in state.vehicles.items() if rid in k.assigned_unserved)
    c = state.commitments[vid]
    if absent_seats == r.seats:
        state.status[rid] = RequestState.COMPLETED_UNSERVED
        k = state.vehicles[vid]
        state.vehicles[vid] = replace(k, assigned_unserved=k.assigned_unserved - {rid})
        state.commitments[vid] = _as_pass(c, [rid])
        return state
    state.requests[rid] = replace(r, seats=r.seats - absent_seats)
    served = dict(c.served)
    served[rid] = replace(served[rid], seats=served[rid].seats - absent_seats)
    stops = _release(c.schedule.stops, rid, absent_seats)
    state.commitments[vid] = replace(c, schedule=replace(c.schedule, stops=stops), served=served)
    return state


def state_violations(state: SystemState) -> list:
    """Consistency problems in a state (empty when sound)."""
    out = []
    seen: dict = {}
    for vid, k in state.vehicles.items():
        for rid in k.in_service:
            if rid in seen:
                out.append(f"{rid} in service on both {seen[rid]} and {vid}")
            seen[rid] = vid
            if state.status.get(rid) != RequestState.IN_SERVICE:
                out.append(f"{rid} on board {vid} but marked {state.status.get(rid)}")
        if sum(state.requests[rid].seats for rid in k.in_service) > k.capacity:
            out.append(f"{vid} carries more than its capacity")
    for rid, s in state.status.items():
        if s == RequestState.IN_SERVICE and rid not in seen:
            out.append(f"{rid} marked in service but on no vehicle")
    if state.ledger.profit != state.ledger.revenue - state.ledger.cost:
        out.append("ledger does not balance")
    for vid, c in state.commitments.items():
        try:
            c.check()
        except AssertionError as exc:
            out.append(str(exc))
    return out
