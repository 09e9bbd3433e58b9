"""Fleet-level scheduling.

A full assignment of requests to vehicles splits into independent
single-vehicle problems; their optimal costs add up to the fleet optimum
for that assignment. The coordinator below ships each vehicle its request
group and collects the cost report, either serially ("cumulative") or
through a pool of worker processes ("distributed").
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .domain import Request, Schedule, Vehicle
from .errors import InputError, OracleCapExceeded
from .network import ReducedNetwork
from .vehicle_scheduler import solve_vehicle

DEFAULT_CENTS_PER_MILE = 16
DEFAULT_ORACLE_CAP = 5
MODES = ("cumulative", "distributed")

Assignment = dict  # request id -> vehicle id


@dataclass(frozen=True)
class AssignRequests:
    vehicle: Vehicle
    requests: tuple  # of Request, sorted by id


@dataclass(frozen=True)
class CostReport:
    vehicle_id: str
    schedule: Schedule | None

    @property
    def feasible(self) -> bool:
        return self.schedule is not None


@dataclass
class FleetResult:
    schedules: dict  # vehicle id -> Schedule
    total_cost: int  # cents
    total_units: int
    assignment: dict = field(default_factory=dict)


_worker_state: dict = {}


def _worker_init(rn, backend):
    _worker_state["rn"] = rn
    _worker_state["backend"] = backend


def _worker_run(batch):
    rn = _worker_state["rn"]
    backend = _worker_state["backend"]
    return [CostReport(m.vehicle.id, solve_vehicle(m.vehicle, m.requests, rn, backend=backend))
            for m in batch]


class Coordinator:
    """Routes per-vehicle subproblems to workers and gathers cost reports.

    Vehicles listed in ``unavailable`` have their subproblems solved by the
    coordinator itself. Results come back in message order whatever the
    completion order, so every mode yields identical output.
    """

    def __init__(self, rn: ReducedNetwork, mode: str = "cumulative", workers: int = 1,
                 unavailable: Iterable[str] = (), cache: bool = True, backend: str | None = None):
        if mode not in MODES:
            raise InputError(f"unknown execution mode {mode!r}")
        if workers < 1:
            raise InputError("workers must be >= 1")
        self.rn = rn
        self.mode = mode
        self.workers = workers
        self.unavailable = frozenset(unavailable)
        self.backend = backend
        self._cache: dict | None = {} if cache else None
        self._pool: ProcessPoolExecutor | None = None
        self.solved = 0

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _local(self, msg: AssignRequests) -> CostReport:
        return CostReport(msg.vehicle.id, solve_vehicle(msg.vehicle, msg.requests, self.rn, backend=self.backend))

    def dispatch(self, messages: list[AssignRequests]) -> list[CostReport]:
        out: list = [None] * len(messages)
        todo = []
        first: dict = {}
        dupes = []
        for n, m in enumerate(messages):
            if self._cache is not None and m in self._cache:
                out[n] = self._cache[m]
            elif m in first:
                dupes.append((n, first[m]))
            else:
                first[m] = n
                todo.append(n)
        remote = [n for n in todo if self.mode == "distributed" and messages[n].vehicle.id not in self.unavailable]
        local = [n for n in todo if n not in set(remote)]
        if remote:
            if self._pool is None:
                self._pool = ProcessPoolExecutor(self.workers, initializer=_worker_init,
                                                 initargs=(self.rn, self.backend))
            size = math.ceil(len(remote) / self.workers)
            chunks = [remote[i:i + size] for i in range(0, len(remote), size)]
            results = self._pool.map(_worker_run, [[messages[n] for n in c] for c in chunks])
            for c, reps in zip(chunks, results):
                for n, rep in zip(c, reps):
                    out[n] = rep
        for n in local:
            out[n] = self._local(messages[n])
        for n, src in dupes:
            out[n] = out[src]
        self.solved += len(todo)
        if self._cache is not None:
            for n in todo:
                self._cache[messages[n]] = out[n]
        return out


def _as_map(requests) -> dict:
    if isinstance(requests, Mapping):
        return dict(requests)
    return {r.id: r for r in requests}


def assignment_messages(assign: Mapping[str, str], vehicles: Iterable[Vehicle],
                        requests) -> list[AssignRequests] | None:
    """Group an assignment into one message per vehicle with work to do."""
    vmap = {k.id: k for k in vehicles}
    rmap = _as_map(requests)
    full = dict(assign)
    for k in vmap.values():
        for rid in k.in_service:
            if full.setdefault(rid, k.id) != k.id:
                raise InputError(f"in-service request {rid} must stay on vehicle {k.id}")
    groups: dict = {}
    for rid, vid in full.items():
        if rid not in rmap:
            raise InputError(f"unknown request {rid!r}")
        if vid not in vmap:
            raise InputError(f"unknown vehicle {vid!r}")
        groups.setdefault(vid, []).append(rmap[rid])
    return [AssignRequests(vmap[vid], tuple(sorted(groups[vid], key=lambda r: r.id)))
            for vid in sorted(groups)]


def solve_assignment(assign: Mapping[str, str], vehicles, requests, rn: ReducedNetwork, *,
                     coordinator: Coordinator | None = None,
                     cents_per_mile=DEFAULT_CENTS_PER_MILE) -> FleetResult | None:
    """Cheapest fleet schedules for a fixed request-to-vehicle assignment.

    None when any vehicle cannot serve its group.
    """
    vehicles = list(vehicles)
    msgs = assignment_messages(assign, vehicles, requests)
    coord = coordinator or Coordinator(rn)
    reports = coord.dispatch(msgs)
    if not all(rep.feasible for rep in reports):
        return None
    schedules = {rep.vehicle_id: rep.schedule for rep in reports}
    return FleetResult(
        schedules=schedules,
        total_cost=sum(s.cents(cents_per_mile) for s in schedules.values()),
        total_units=sum(s.cost_units for s in schedules.values()),
        assignment={r.id: m.vehicle.id for m in msgs for r in m.requests},
    )


def brute_force_fleet(requests, vehicles, rn: ReducedNetwork, *, cap: int = DEFAULT_ORACLE_CAP,
                      cents_per_mile=DEFAULT_CENTS_PER_MILE,
                      coordinator: Coordinator | None = None) -> FleetResult | None:
    """Fleet optimum over every assignment (all requests must be served).

    Ties go to the lower cost in distance units, then to the assignment with
    the lexicographically smallest vehicle-id vector.
    """
    rmap = _as_map(requests)
    vehicles = sorted(vehicles, key=lambda k: k.id)
    forced = {rid: k.id for k in vehicles for rid in k.in_service}
    free = sorted(rid for rid in rmap if rid not in forced)
    if len(free) > cap:
        raise OracleCapExceeded(f"{len(free)} requests exceed the oracle cap of {cap}")
    coord = coordinator or Coordinator(rn)
    best = None
    best_key = None
    for combo in itertools.product([k.id for k in vehicles], repeat=len(free)):
        assign = dict(forced)
        assign.update(zip(free, combo))
        res = solve_assignment(assign, vehicles, rmap, rn, coordinator=coord, cents_per_mile=cents_per_mile)
        if res is None:
            continue
        key = (res.total_cost, res.total_units, combo)
        if best_key is None or key < best_key:
            best, best_key = res, key
    return best


def _onboard(k: Vehicle, lookup: Mapping[str, Request]) -> tuple:
    try:
        return tuple(lookup[rid] for rid in sorted(k.in_service))
    except KeyError as exc:
        raise InputError(f"in-service request {exc} of vehicle {k.id} not supplied") from None


def _solo_message(r: Request, k: Vehicle, lookup) -> AssignRequests:
    group = {x.id: x for x in _onboard(k, lookup)}
    group[r.id] = r
    return AssignRequests(k, tuple(group[i] for i in sorted(group)))


def is_admissible(r: Request, k: Vehicle, rn: ReducedNetwork, requests=None) -> bool:
    """Whether ``k`` can serve ``r`` on top of its in-service passengers."""
    lookup = _as_map(requests or ())
    lookup.setdefault(r.id, r)
    msg = _solo_message(r, k, lookup)
    return solve_vehicle(k, msg.requests, rn) is not None


def build_tabu_lists(requests, vehicles, rn: ReducedNetwork, *, lookup=None,
                     coordinator: Coordinator | None = None) -> dict:
    """Map each request id to the set of vehicle ids that cannot serve it.

    An in-service request is tabu for every vehicle except its own.
    """
    rlist = sorted(_as_map(requests).values(), key=lambda r: r.id)
    lk = _as_map(lookup or ())
    for r in rlist:
        lk.setdefault(r.id, r)
    vehicles = sorted(vehicles, key=lambda k: k.id)
    owner = {rid: k.id for k in vehicles for rid in k.in_service}
    coord = coordinator or Coordinator(rn)
    pairs, msgs = [], []
    for r in rlist:
        for k in vehicles:
            if r.id in owner:
                continue
            pairs.append((r.id, k.id))
            msgs.append(_solo_message(r, k, lk))
    reports = coord.dispatch(msgs)
    tabu = {r.id: set() for r in rlist}
    for (rid, vid), rep in zip(pairs, reports):
        if not rep.feasible:
            tabu[rid].add(vid)
    all_ids = {k.id for k in vehicles}
    for rid, vid in owner.items():
        if rid in tabu:
            tabu[rid] = all_ids - {vid}
    return {rid: frozenset(v) for rid, v in tabu.items()}


def globally_inadmissible(tabu: Mapping[str, frozenset], vehicles) -> frozenset:
    """Requests no vehicle can serve."""
    all_ids = frozenset(k.id for k in vehicles)
    return frozenset(rid for rid, t in tabu.items() if t >= all_ids)
