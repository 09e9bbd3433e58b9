"""Requests, vehicles, schedules, and the normalization rules applied to them.

Money is integer cents. Open time-window bounds are ``None`` rather than a
float infinity so that JSON round trips are exact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Hashable

from .errors import ConstraintViolation, InputError
from .network import COST_SCALE

Vertex = Hashable


class RequestState(str, enum.Enum):
    NEW = "new"
    CARRIED_OVER = "carried_over"
    ASSIGNED_UNSERVED = "assigned_unserved"
    IN_SERVICE = "in_service"
    COMPLETED = "completed"
    COMPLETED_UNSERVED = "completed_unserved"
    REJECTED = "rejected"


def round_half_up(x) -> int:
    return math.floor(Fraction(x) + Fraction(1, 2))


def as_fraction(x) -> Fraction:
    # str() first so that 0.15 means 3/20, not its binary approximation
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def cost_cents(cost_units: int, cents_per_mile) -> int:
    return round_half_up(Fraction(cost_units) * as_fraction(cents_per_mile) / COST_SCALE)


def lower(bound: float | None) -> float:
    return -math.inf if bound is None else bound


def upper(bound: float | None) -> float:
    return math.inf if bound is None else bound


@dataclass(frozen=True)
class Request:
    id: str
    pickup: Vertex
    dropoff: Vertex
    max_ride: float | None  # None: unbounded
    earliest: float | None
    latest: float | None
    seats: int
    fare: int = 0
    state: RequestState = RequestState.NEW

    def __post_init__(self):
        if self.seats < 1:
            raise InputError(f"request {self.id}: seats must be >= 1")
        if self.max_ride is not None and not self.max_ride > 0:
            raise InputError(f"request {self.id}: max ride time must be positive")
        if lower(self.earliest) > upper(self.latest):
            raise InputError(f"request {self.id}: empty time window")
        if self.fare < 0:
            raise InputError(f"request {self.id}: negative fare")
        if self.state == RequestState.NEW and self.pickup == self.dropoff:
            raise InputError(f"request {self.id}: pickup equals dropoff")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "pickup": self.pickup,
            "dropoff": self.dropoff,
            "max_ride": self.max_ride,
            "earliest": self.earliest,
            "latest": self.latest,
            "seats": self.seats,
            "fare": self.fare,
            "state": self.state.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Request":
        try:
            return cls(
                id=str(d["id"]),
                pickup=d["pickup"],
                dropoff=d["dropoff"],
                max_ride=d["max_ride"],
                earliest=d["earliest"],
                latest=d["latest"],
                seats=int(d["seats"]),
                fare=int(d.get("fare", 0)),
                state=RequestState(d.get("state", "new")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad request record: {exc}") from exc


@dataclass(frozen=True)
class Vehicle:
    """A fleet vehicle at scheduling time.

    ``ready_time`` is when it reaches ``location`` and ``max_time`` the
    latest time it may still be operating, both on the clock used by the
    request windows.
    """

    id: str
    location: Vertex
    ready_time: float
    max_time: float
    capacity: int
    in_service: frozenset = frozenset()
    assigned_unserved: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "ready_time", float(self.ready_time))
        object.__setattr__(self, "max_time", float(self.max_time))
        object.__setattr__(self, "in_service", frozenset(self.in_service))
        object.__setattr__(self, "assigned_unserved", frozenset(self.assigned_unserved))
        if self.capacity < 1:
            raise InputError(f"vehicle {self.id}: capacity must be >= 1")
        if self.ready_time > self.max_time:
            raise InputError(f"vehicle {self.id}: ready after its operating limit")
        if self.in_service & self.assigned_unserved:
            raise InputError(f"vehicle {self.id}: request both in service and unserved")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "location": self.location,
            "ready_time": self.ready_time,
            "max_time": self.max_time,
            "capacity": self.capacity,
            "in_service": sorted(self.in_service),
            "assigned_unserved": sorted(self.assigned_unserved),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vehicle":
        try:
            return cls(
                id=str(d["id"]),
                location=d["location"],
                ready_time=float(d["ready_time"]),
                max_time=float(d["max_time"]),
                capacity=int(d["capacity"]),
                in_service=frozenset(d.get("in_service", ())),
                assigned_unserved=frozenset(d.get("assigned_unserved", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad vehicle record: {exc}") from exc


STOP_KINDS = ("start", "pickup", "dropoff", "refuel", "pass")


@dataclass(frozen=True)
class Stop:
    vertex: Vertex
    time: float
    occupancy: int
    kind: str
    request: str | None = None

    def to_dict(self) -> dict:
        return {
            "vertex": self.vertex,
            "time": self.time,
            "occupancy": self.occupancy,
            "kind": self.kind,
            "request": self.request,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Stop":
        return cls(d["vertex"], float(d["time"]), int(d["occupancy"]), d["kind"], d.get("request"))


@dataclass(frozen=True)
class Schedule:
    vehicle_id: str
    stops: tuple[Stop, ...] = ()
    cost_units: int = 0

    @property
    def end_station(self):
        if self.stops and self.stops[-1].kind == "refuel":
            return self.stops[-1].vertex
        return None

    @property
    def distance(self) -> float:
        return self.cost_units / COST_SCALE

    @property
    def served(self) -> frozenset:
        return frozenset(s.request for s in self.stops if s.kind == "dropoff")

    def cents(self, cents_per_mile) -> int:
        return cost_cents(self.cost_units, cents_per_mile)

    def key_route(self) -> list:
        return [s.vertex for s in self.stops]

    def to_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "cost_units": self.cost_units,
            "end_station": self.end_station,
            "stops": [s.to_dict() for s in self.stops],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        return cls(d["vehicle_id"], tuple(Stop.from_dict(s) for s in d["stops"]), int(d["cost_units"]))


def split_oversized(r: Request, q_max: int) -> list[Request]:
    """Split a request into parts of at most ``q_max`` seats.

    The fare is apportioned by seats; rounding leftovers go to the first part.
    """
    if q_max < 1:
        raise InputError("q_max must be >= 1")
    if r.seats <= q_max:
        return [r]
    sizes = [q_max] * (r.seats // q_max)
    if r.seats % q_max:
        sizes.append(r.seats % q_max)
    fares = [round_half_up(Fraction(r.fare * q, r.seats)) for q in sizes]
    fares[0] = r.fare - sum(fares[1:])
    return [
        replace(r, id=f"{r.id}.{n}", seats=q, fare=f)
        for n, (q, f) in enumerate(zip(sizes, fares), start=1)
    ]


def normalize_in_service(r: Request, k: Vehicle, elapsed: float) -> Request:
    """Restate an on-board request as starting at the vehicle's next vertex."""
    if r.id not in k.in_service:
        raise InputError(f"request {r.id} is not in service on vehicle {k.id}")
    max_ride = r.max_ride
    if max_ride is not None:
        if elapsed >= max_ride:
            raise ConstraintViolation(f"request {r.id} has already exceeded its ride time")
        max_ride = max_ride - elapsed
    return replace(
        r,
        pickup=k.location,
        max_ride=max_ride,
        earliest=None,
        latest=None,
        state=RequestState.IN_SERVICE,
    )
