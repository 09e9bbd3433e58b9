"""Road graph, shortest paths, and the key-vertex reduction.

Edge costs are given in miles but every path search runs on integer
micro-mile units (``COST_SCALE`` per mile). Integer sums make the
triangle inequality and all cost ties exact, which the branch-and-bound
scheduler relies on.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, NamedTuple

import numpy as np

from .errors import InfeasibleRouteError, InputError

Vertex = Hashable

COST_SCALE = 1_000_000


def to_units(miles: float) -> int:
    return int(round(miles * COST_SCALE))


class Edge(NamedTuple):
    i: Vertex
    j: Vertex
    cost: float  # miles
    time: float  # seconds


class Leg(NamedTuple):
    cost_units: int
    time: float
    path: tuple

    @property
    def cost(self) -> float:
        return self.cost_units / COST_SCALE


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    vertices: frozenset
    edges: tuple[Edge, ...]
    refuel_stations: frozenset
    _caches: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "refuel_stations", frozenset(self.refuel_stations))
        object.__setattr__(self, "edges", tuple(Edge(*e) for e in self.edges))
        if not self.refuel_stations:
            raise InputError("network needs at least one refuel station")
        if not self.refuel_stations <= self.vertices:
            raise InputError("refuel stations must be network vertices")
        seen = set()
        for e in self.edges:
            if e.i not in self.vertices or e.j not in self.vertices:
                raise InputError(f"edge {e.i}->{e.j} references an unknown vertex")
            if not (e.cost > 0 and e.time > 0):
                raise InputError(f"edge {e.i}->{e.j} needs positive cost and time")
            if (e.i, e.j) in seen:
                raise InputError(f"duplicate edge {e.i}->{e.j}")
            seen.add((e.i, e.j))

    def __getstate__(self):
        # drop path caches and cached properties; workers rebuild what they need
        return {"vertices": self.vertices, "edges": self.edges,
                "refuel_stations": self.refuel_stations, "_caches": {}}

    def __setstate__(self, state):
        self.__dict__.update(state)

    @cached_property
    def adjacency(self) -> dict:
        adj: dict = {v: [] for v in self.vertices}
        for e in self.edges:
            adj[e.i].append((e.j, to_units(e.cost), e.time))
        for v in adj:
            adj[v].sort(key=lambda item: item[0])
        return adj

    @cached_property
    def edge_map(self) -> dict:
        return {(e.i, e.j): e for e in self.edges}

    def with_edge_time(self, i, j, new_time: float) -> "RoadNetwork":
        if (i, j) not in self.edge_map:
            raise InputError(f"unknown edge {i}->{j}")
        edges = tuple(e._replace(time=new_time) if (e.i, e.j) == (i, j) else e for e in self.edges)
        return RoadNetwork(self.vertices, edges, self.refuel_stations)

    def single_source(self, source) -> dict:
        """Min-cost paths from ``source`` to every reachable vertex.

        Equal-cost paths are resolved to the lexicographically smallest
        vertex sequence. Results are cached on the instance.
        """
        cache = self._caches.setdefault("sssp", {})
        if source in cache:
            return cache[source]
        if source not in self.vertices:
            raise InputError(f"unknown vertex {source!r}")
        adj = self.adjacency
        done: dict = {}
        heap = [(0, (source,))]
        while heap:
            dist, path = heapq.heappop(heap)
            v = path[-1]
            if v in done:
                continue
            done[v] = (dist, path)
            for w, c, _ in adj[v]:
                if w not in done:
                    heapq.heappush(heap, (dist + c, path + (w,)))
        emap = self.edge_map
        out = {}
        for v, (dist, path) in done.items():
            t = 0.0
            for a, b in zip(path, path[1:]):
                t += emap[(a, b)].time
            out[v] = Leg(dist, t, path)
        cache[source] = out
        return out

    def to_dict(self) -> dict:
        return {
            "vertices": sorted(self.vertices),
            "edges": [[e.i, e.j, e.cost, e.time] for e in self.edges],
            "refuel_stations": sorted(self.refuel_stations),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoadNetwork":
        try:
            return cls(
                frozenset(data["vertices"]),
                tuple(Edge(*e) for e in data["edges"]),
                frozenset(data["refuel_stations"]),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad network data: {exc}") from exc


def shortest_path(net: RoadNetwork, i, j) -> Leg | None:
    """Min-cost path from i to j, or None when j is unreachable."""
    if j not in net.vertices:
        raise InputError(f"unknown vertex {j!r}")
    return net.single_source(i).get(j)


class ReducedNetwork:
    """Shortest-path closure of a road network over a set of key vertices.

    Immutable after construction. ``cost_matrix``/``time_matrix`` index the
    sorted key list; missing pairs hold -1 / inf and the diagonal is 0.
    """

    def __init__(self, net: RoadNetwork, keys: Iterable):
        keys = frozenset(keys)
        missing = [k for k in keys if k not in net.vertices]
        if missing:
            raise InputError(f"key vertices not in network: {sorted(missing)!r}")
        self.network = net
        self.keys = tuple(sorted(keys | net.refuel_stations))
        self.index = {v: n for n, v in enumerate(self.keys)}
        self.stations = tuple(sorted(net.refuel_stations))
        pairs = {}
        for i in self.keys:
            reach = net.single_source(i)
            for j in self.keys:
                if j != i and j in reach:
                    pairs[(i, j)] = reach[j]
        self.pair_data = pairs
        n = len(self.keys)
        cost = np.full((n, n), -1, dtype=np.int64)
        time = np.full((n, n), np.inf)
        np.fill_diagonal(cost, 0)
        np.fill_diagonal(time, 0.0)
        for (i, j), leg in pairs.items():
            cost[self.index[i], self.index[j]] = leg.cost_units
            time[self.index[i], self.index[j]] = leg.time
        cost.setflags(write=False)
        time.setflags(write=False)
        self.cost_matrix = cost
        self.time_matrix = time

    def __contains__(self, v) -> bool:
        return v in self.index

    def has(self, i, j) -> bool:
        return i == j or (i, j) in self.pair_data

    def leg(self, i, j) -> Leg:
        if i == j:
            if i not in self.index:
                raise InfeasibleRouteError(f"{i!r} is not a key vertex")
            return Leg(0, 0.0, (i,))
        try:
            return self.pair_data[(i, j)]
        except KeyError:
            raise InfeasibleRouteError(f"no path {i!r} -> {j!r}") from None


_REDUCE_CACHE = "reduced"


def reduce(net: RoadNetwork, key_vertices: Iterable) -> ReducedNetwork:
    keys = frozenset(key_vertices)
    cache = net._caches.setdefault(_REDUCE_CACHE, {})
    rn = cache.get(keys)
    if rn is None:
        rn = ReducedNetwork(net, keys)
        if len(cache) > 64:
            cache.clear()
        cache[keys] = rn
    return rn


def expand_route(rn: ReducedNetwork, key_route) -> list:
    """Full road-graph route for a sequence of key vertices."""
    key_route = list(key_route)
    if not key_route:
        return []
    route = [key_route[0]]
    for a, b in zip(key_route, key_route[1:]):
        route.extend(rn.leg(a, b).path[1:])
    return route
