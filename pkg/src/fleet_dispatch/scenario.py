"""Scenario files and the seeded synthetic scenario generator."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .admission import DEFAULT_DISCOUNT, GAConfig
from .domain import Request, Vehicle
from .errors import InputError
from .fleet import DEFAULT_CENTS_PER_MILE
from .network import Edge, RoadNetwork, shortest_path

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Scenario:
    network: RoadNetwork
    vehicles: tuple  # of Vehicle
    arrivals: tuple  # of (interval, Request), sorted by interval
    horizon: int
    interval_seconds: float = 180.0
    ga: GAConfig = field(default_factory=GAConfig)
    fuel_cents_per_mile: int = DEFAULT_CENTS_PER_MILE
    discount: float = DEFAULT_DISCOUNT
    full_operation_time: float = 10800.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(sorted(self.vehicles, key=lambda k: k.id)))
        object.__setattr__(self, "arrivals", tuple(sorted(self.arrivals, key=lambda a: (a[0], a[1].id))))
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")
        if not self.interval_seconds > 0:
            raise InputError("interval_seconds must be positive")
        if any(n < 0 for n, _ in self.arrivals):
            raise InputError("arrival intervals must be >= 0")
        ids = [r.id for _, r in self.arrivals]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate request ids in arrivals")
        if len({k.id for k in self.vehicles}) != len(self.vehicles):
            raise InputError("duplicate vehicle ids")

    @property
    def requests(self) -> list:
        return [r for _, r in self.arrivals]

    def arrivals_at(self, n: int) -> list:
        return [r for m, r in self.arrivals if m == n]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "seed": self.seed,
            "network": self.network.to_dict(),
            "vehicles": [k.to_dict() for k in self.vehicles],
            "arrivals": [{"interval": n, "request": r.to_dict()} for n, r in self.arrivals],
            "horizon": self.horizon,
            "interval_seconds": self.interval_seconds,
            "ga": self.ga.to_dict(),
            "fuel_cents_per_mile": self.fuel_cents_per_mile,
            "discount": self.discount,
            "full_operation_time": self.full_operation_time,
        }

    @classmethod
    def from_dict(cls, d: dict, network: RoadNetwork | None = None) -> "Scenario":
        """Parse a scenario; ``network`` overrides a by-reference network entry."""
        if d.get("format_version") != FORMAT_VERSION:
            raise InputError(f"unsupported scenario format_version {d.get('format_version')!r}")
        try:
            if network is None:
                if not isinstance(d["network"], dict):
                    raise InputError("network given by reference; load it first")
                network = RoadNetwork.from_dict(d["network"])
            return cls(
                network=network,
                vehicles=tuple(Vehicle.from_dict(v) for v in d["vehicles"]),
                arrivals=tuple((int(a["interval"]), Request.from_dict(a["request"])) for a in d["arrivals"]),
                horizon=int(d["horizon"]),
                interval_seconds=float(d.get("interval_seconds", 180.0)),
                ga=GAConfig.from_dict(d.get("ga", {})),
                fuel_cents_per_mile=d.get("fuel_cents_per_mile", DEFAULT_CENTS_PER_MILE),
                discount=d.get("discount", DEFAULT_DISCOUNT),
                full_operation_time=float(d.get("full_operation_time", 10800.0)),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad scenario: {exc}") from exc


def rebucket(sc: Scenario, per_interval: int, interval_seconds: float | None = None) -> Scenario:
    """Re-split the request stream into intervals of ``per_interval`` requests.

    Requests keep their order of earliest pickup time (then id).
    """
    if per_interval < 1:
        raise InputError("per_interval must be >= 1")
    reqs = sorted(sc.requests, key=lambda r: (r.earliest if r.earliest is not None else -math.inf, r.id))
    arrivals = tuple((n // per_interval, r) for n, r in enumerate(reqs))
    horizon = max(1, math.ceil(len(reqs) / per_interval))
    return replace(sc, arrivals=arrivals, horizon=horizon,
                   interval_seconds=interval_seconds if interval_seconds is not None else sc.interval_seconds)


@dataclass(frozen=True)
class ScenarioParams:
    requests: int = 100
    vehicles: int = 5
    grid: int = 8  # grid side, in vertices
    spacing: float = 0.8  # miles between grid neighbours
    stations: int = 5
    capacity: int = 5
    max_seats: int = 5
    interval_seconds: float = 180.0
    per_interval: int = 10
    arrival_spacing: float = 18.0  # mean seconds between request times
    window: float = 900.0
    ride_factor: float = 1.5
    speed_mph: float = 20.0
    base_fare: int = 260  # cents
    fare_per_mile: int = 280  # cents
    fuel_cents_per_mile: int = DEFAULT_CENTS_PER_MILE
    discount: float = DEFAULT_DISCOUNT
    full_operation_time: float = 10800.0
    ga: GAConfig = field(default_factory=GAConfig)

    def validate(self):
        if self.requests < 0 or self.vehicles < 1:
            raise InputError("need requests >= 0 and vehicles >= 1")
        if self.grid < 2 or not self.spacing > 0:
            raise InputError("grid must be >= 2 with positive spacing")
        if not 1 <= self.stations <= self.grid ** 2:
            raise InputError("stations must be between 1 and the vertex count")
        if self.capacity < 1 or not 1 <= self.max_seats <= self.capacity:
            raise InputError("need 1 <= max_seats <= capacity")
        if self.per_interval < 1 or not self.interval_seconds > 0:
            raise InputError("per_interval and interval_seconds must be positive")
        if not (self.window >= 0 and self.ride_factor >= 1 and self.speed_mph > 0):
            raise InputError("window >= 0, ride_factor >= 1 and speed > 0 required")
        if self.base_fare < 0 or self.fare_per_mile < 0:
            raise InputError("fares must be nonnegative")


def _grid_network(p: ScenarioParams, rng: random.Random) -> RoadNetwork:
    n = p.grid
    pos = {}
    for r in range(n):
        for c in range(n):
            jx, jy = (rng.uniform(-0.2, 0.2) * p.spacing for _ in range(2))
            pos[r * n + c] = (c * p.spacing + jx, r * p.spacing + jy)
    sec_per_mile = 3600.0 / p.speed_mph
    edges = []
    for r in range(n):
        for c in range(n):
            v = r * n + c
            for w in ([v + 1] if c + 1 < n else []) + ([v + n] if r + 1 < n else []):
                d = math.dist(pos[v], pos[w])
                for a, b in ((v, w), (w, v)):
                    cost = round(d * rng.uniform(1.0, 1.15), 4)
                    # time proportional to cost keeps travel times metric
                    edges.append(Edge(a, b, cost, round(cost * sec_per_mile, 4)))
    stations = rng.sample(sorted(pos), p.stations)
    return RoadNetwork(frozenset(pos), tuple(edges), frozenset(stations))


def generate_scenario(seed: int, params: ScenarioParams = ScenarioParams()) -> Scenario:
    params.validate()
    rng = random.Random(seed)
    net = _grid_network(params, rng)
    verts = sorted(net.vertices)
    start = params.interval_seconds
    wid = len(str(params.vehicles))
    vehicles = tuple(
        Vehicle(f"v{n:0{wid}d}", rng.choice(verts), start, start + params.full_operation_time, params.capacity)
        for n in range(1, params.vehicles + 1)
    )
    period = params.arrival_spacing * params.requests
    times = sorted(round(rng.uniform(0, period), 1) for _ in range(params.requests))
    rwid = max(3, len(str(params.requests)))
    reqs = []
    for n, e in enumerate(times, start=1):
        while True:
            s, d = rng.sample(verts, 2)
            leg = shortest_path(net, s, d)
            if leg is not None:
                break
        reqs.append(Request(
            id=f"r{n:0{rwid}d}",
            pickup=s,
            dropoff=d,
            max_ride=round(params.ride_factor * leg.time, 2),
            earliest=e,
            latest=e + params.window,
            seats=rng.randint(1, params.max_seats),
            fare=params.base_fare + round(params.fare_per_mile * leg.cost),
        ))
    arrivals = tuple((n // params.per_interval, r) for n, r in enumerate(reqs))
    return Scenario(
        network=net,
        vehicles=vehicles,
        arrivals=arrivals,
        horizon=max(1, math.ceil(params.requests / params.per_interval)),
        interval_seconds=params.interval_seconds,
        ga=replace(params.ga, seed=seed),
        fuel_cents_per_mile=params.fuel_cents_per_mile,
        discount=params.discount,
        full_operation_time=params.full_operation_time,
        seed=seed,
    )
