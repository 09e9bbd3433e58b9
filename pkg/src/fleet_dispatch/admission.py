"""Admission control: pick the profit-maximizing admissible request subset.

The upper level chooses which requests to admit (z) and which vehicle takes
each one (kappa); the lower level prices that choice with the exact fleet
scheduler. A genetic algorithm searches the upper level, and an exhaustive
search over small pools serves as the reference.

Requests already committed in earlier intervals carry forced genes. An
in-service request keeps both its admit flag and its vehicle. An admitted
but not yet picked-up request keeps its admit flag, but its vehicle may
change.
"""
from __future__ import annotations

import functools
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .domain import Request, Vehicle, as_fraction, round_half_up
from .errors import InfeasibleError, InputError, OracleCapExceeded
from .fleet import (DEFAULT_CENTS_PER_MILE, DEFAULT_ORACLE_CAP, Coordinator, FleetResult,
                    assignment_messages, build_tabu_lists, globally_inadmissible)
from .network import ReducedNetwork

DEFAULT_DISCOUNT = 0.5


@functools.total_ordering
class _Infeasible:
    """Fitness of a chromosome no schedule can serve; below every number."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFEASIBLE"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return 0

    def __lt__(self, other):
        return other is not self

    def __reduce__(self):
        return (_Infeasible, ())


INFEASIBLE = _Infeasible()


def revenue(r: Request, discount=DEFAULT_DISCOUNT) -> int:
    """Operator revenue for ``r``: its fare less the discount, in cents."""
    d = as_fraction(discount)
    if not 0 <= d <= 1:
        raise InputError("discount must lie in [0, 1]")
    return round_half_up(r.fare * (1 - d))


@dataclass(frozen=True)
class GAConfig:
    n_pop: int = 16
    x_rate: float = 0.5
    mu: float = 0.15
    gamma: float = 0.5
    generations: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.n_pop < 2 or self.n_pop % 2:
            raise InputError("n_pop must be an even number >= 2")
        if not 0 < self.x_rate < 1:
            raise InputError("x_rate must lie strictly between 0 and 1")
        if not (0 <= self.mu <= 1 and 0 <= self.gamma <= 1):
            raise InputError("mu and gamma must lie in [0, 1]")
        if self.generations < 1:
            raise InputError("generations must be >= 1")

    def to_dict(self) -> dict:
        return {"n-pop": self.n_pop, "x-rate": self.x_rate, "mu": self.mu,
                "gamma": self.gamma, "generations": self.generations, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "GAConfig":
        names = {"n-pop": "n_pop", "x-rate": "x_rate", "mu": "mu", "gamma": "gamma",
                 "generations": "generations", "seed": "seed"}
        unknown = set(d) - set(names)
        if unknown:
            raise InputError(f"unknown GA keys: {sorted(unknown)}")
        return cls(**{names[k]: v for k, v in d.items()})


@dataclass(frozen=True)
class Chromosome:
    """One gene per pool request: the assigned vehicle id, or None if not admitted."""

    genes: tuple

    @property
    def z(self) -> tuple:
        return tuple(0 if g is None else 1 for g in self.genes)

    @property
    def kappa(self) -> tuple:
        return self.genes

    @property
    def key(self) -> tuple:
        return tuple((0, "") if g is None else (1, g) for g in self.genes)

    @property
    def vehicles_used(self) -> frozenset:
        return frozenset(g for g in self.genes if g is not None)

    def set(self, i: int, vid) -> "Chromosome":
        genes = list(self.genes)
        genes[i] = vid
        return Chromosome(tuple(genes))


class AdmissionProblem:
    """Pool, fleet, tabu lists, and a memoized fitness function."""

    def __init__(self, pool: Iterable[Request], vehicles: Iterable[Vehicle], rn: ReducedNetwork, *,
                 tabu: dict | None = None, discount=DEFAULT_DISCOUNT,
                 cents_per_mile=DEFAULT_CENTS_PER_MILE, coordinator: Coordinator | None = None):
        self.requests = tuple(sorted(pool, key=lambda r: r.id))
        self.ids = tuple(r.id for r in self.requests)
        if len(set(self.ids)) != len(self.ids):
            raise InputError("duplicate request ids in pool")
        self.vehicles = tuple(sorted(vehicles, key=lambda k: k.id))
        self.vids = tuple(k.id for k in self.vehicles)
        self.rn = rn
        self.cents_per_mile = cents_per_mile
        self.coordinator = coordinator or Coordinator(rn)
        pos = {rid: i for i, rid in enumerate(self.ids)}
        self.owner: dict = {}
        self.committed: dict = {}
        for k in self.vehicles:
            for rid in k.in_service:
                if rid not in pos:
                    raise InputError(f"in-service request {rid} of {k.id} missing from the pool")
                self.owner[pos[rid]] = k.id
            for rid in k.assigned_unserved:
                if rid in pos:
                    self.committed[pos[rid]] = k.id
        if tabu is None:
            tabu = build_tabu_lists(self.requests, self.vehicles, rn, coordinator=self.coordinator)
        self.tabu = {rid: frozenset(tabu.get(rid, ())) for rid in self.ids}
        self.rho = tuple(revenue(r, discount) for r in self.requests)
        bad = globally_inadmissible(self.tabu, self.vehicles)
        self.excluded = frozenset(i for i, rid in enumerate(self.ids)
                                  if rid in bad and i not in self.owner and i not in self.committed)
        self.free = tuple(i for i in range(len(self.ids))
                          if i not in self.owner and i not in self.committed and i not in self.excluded)
        # positions mutation may touch
        self.mutable = tuple(sorted(set(self.free) | set(self.committed)))
        self.allowed = {i: tuple(v for v in self.vids if v not in self.tabu[self.ids[i]])
                        for i in range(len(self.ids))}
        self._memo: dict = {}
        self._baseline = None
        self._addable = None

    def baseline(self) -> Chromosome:
        """Forced genes only: the cheapest chromosome any outcome must contain."""
        if self._baseline is None:
            genes = [None] * len(self.ids)
            for i, vid in {**self.owner, **self.committed}.items():
                genes[i] = vid
            self._baseline = Chromosome(tuple(genes))
        return self._baseline

    def is_valid(self, c: Chromosome) -> bool:
        if len(c.genes) != len(self.ids):
            return False
        for i, vid in self.owner.items():
            if c.genes[i] != vid:
                return False
        return all(c.genes[i] is not None for i in self.committed)

    def _assignment(self, c: Chromosome) -> dict:
        return {self.ids[i]: g for i, g in enumerate(c.genes) if g is not None}

    def _tabu_hit(self, c: Chromosome) -> bool:
        return any(g is not None and g in self.tabu[self.ids[i]] for i, g in enumerate(c.genes))

    def evaluate_many(self, chromosomes: Sequence[Chromosome]) -> list:
        """Fitness of each chromosome; all subproblems go out in one batch."""
        todo = []
        for c in chromosomes:
            if c not in self._memo and c not in todo:
                if not self.is_valid(c):
                    raise InputError("chromosome breaks a forced gene")
                if self._tabu_hit(c):
                    self._memo[c] = (INFEASIBLE, None)
                else:
                    todo.append(c)
        if todo:
            plans = [assignment_messages(self._assignment(c), self.vehicles, self.requests) for c in todo]
            flat = [m for msgs in plans for m in msgs]
            reports = iter(self.coordinator.dispatch(flat))
            for c, msgs in zip(todo, plans):
                reps = [next(reports) for _ in msgs]
                if not all(rep.feasible for rep in reps):
                    self._memo[c] = (INFEASIBLE, None)
                    continue
                scheds = {rep.vehicle_id: rep.schedule for rep in reps}
                res = FleetResult(scheds, sum(s.cents(self.cents_per_mile) for s in scheds.values()),
                                  sum(s.cost_units for s in scheds.values()), self._assignment(c))
                rev = sum(self.rho[i] for i, g in enumerate(c.genes) if g is not None)
                self._memo[c] = (rev - res.total_cost, res)
        return [self._memo[c][0] for c in chromosomes]

    def fitness(self, c: Chromosome):
        return self.evaluate_many([c])[0]

    def result(self, c: Chromosome) -> FleetResult | None:
        self.fitness(c)
        return self._memo[c][1]

    def addable(self) -> list:
        """Free (position, vehicle) pairs that keep the baseline feasible."""
        if self._addable is None:
            base = self.baseline()
            cands = [(i, v) for i in self.free for v in self.allowed[i]]
            fits = self.evaluate_many([base.set(i, v) for i, v in cands])
            self._addable = [p for p, f in zip(cands, fits) if f is not INFEASIBLE]
        return self._addable

    def random_chromosome(self, rng: random.Random) -> Chromosome:
        pairs = self.addable()
        if not pairs:
            return self.baseline()
        i, v = rng.choice(pairs)
        return self.baseline().set(i, v)

    def uniform_chromosome(self, rng: random.Random) -> Chromosome:
        """Forced genes plus a uniform draw over (reject, non-tabu vehicles) for each free gene."""
        genes = list(self.baseline().genes)
        for i in self.free:
            genes[i] = rng.choice((None,) + self.allowed[i])
        return Chromosome(tuple(genes))


def fitness(c: Chromosome, problem: AdmissionProblem):
    return problem.fitness(c)


def init_population(problem: AdmissionProblem, cfg: GAConfig, rng: random.Random) -> list:
    return [problem.random_chromosome(rng) for _ in range(cfg.n_pop)]


def rank(population: Sequence[Chromosome], fits: Sequence) -> list:
    """(chromosome, fitness) pairs, best first; ties by chromosome order."""
    order = sorted(range(len(population)),
                   key=lambda n: (_neg(fits[n]), population[n].key))
    return [(population[n], fits[n]) for n in order]


def _neg(f):
    return (1, 0) if f is INFEASIBLE else (0, -f)


def rank_weights(fits: Sequence) -> list:
    """Weight M-n+1 for rank n of M, averaged over equal-fitness runs."""
    m = len(fits)
    out = [0.0] * m
    n = 0
    while n < m:
        e = n
        while e + 1 < m and fits[e + 1] == fits[n]:
            e += 1
        w = sum(m - r for r in range(n, e + 1)) / (e - n + 1)
        for r in range(n, e + 1):
            out[r] = w
        n = e + 1
    return out


def select_survivors_and_pair(ranked: Sequence, x_rate, rng: random.Random,
                              n_children: int | None = None) -> tuple:
    """Keep the top fraction and draw rank-weighted parent pairs.

    Returns (survivors, pairs) where pairs index into survivors.
    """
    n = len(ranked)
    m = max(1, math.ceil(as_fraction(x_rate) * n))
    survivors = list(ranked[:m])
    if n_children is None:
        n_children = n - m
    weights = rank_weights([f for _, f in survivors])
    pairs = []
    for _ in range(math.ceil(n_children / 2)):
        if m == 1:
            pairs.append((0, 0))
            continue
        a = rng.choices(range(m), weights)[0]
        rest = [x for x in range(m) if x != a]
        b = rng.choices(rest, [weights[x] for x in rest])[0]
        pairs.append((a, b))
    return survivors, pairs


def _adopt(child: Chromosome, other: Chromosome, problem: AdmissionProblem, rng) -> Chromosome:
    extra = sorted(other.vehicles_used - child.vehicles_used)
    if not extra:
        return child
    k = rng.choice(extra)
    genes = list(child.genes)
    for i in problem.free:
        if genes[i] is None and k not in problem.tabu[problem.ids[i]]:
            genes[i] = k
    return Chromosome(tuple(genes))


def crossover(pi: Chromosome, pj: Chromosome, problem: AdmissionProblem, rng: random.Random) -> tuple:
    """Each child copies its parent, then adopts one vehicle only the other parent uses."""
    return _adopt(pi, pj, problem, rng), _adopt(pj, pi, problem, rng)


def mutation_count(mu, n_pop: int, pool_size: int) -> int:
    return round_half_up(as_fraction(mu) * (n_pop - 1) * pool_size)


def mutate(population: list, problem: AdmissionProblem, cfg: GAConfig, rng: random.Random) -> list:
    """Toggle random genes outside the elite (index 0), then random replacement."""
    pop = list(population)
    n = len(pop)
    positions = problem.mutable
    if n > 1 and positions:
        for _ in range(mutation_count(cfg.mu, n, len(problem.ids))):
            q = rng.randrange((n - 1) * len(positions))
            c_idx, i = 1 + q // len(positions), positions[q % len(positions)]
            c = pop[c_idx]
            allowed = problem.allowed[i]
            if i in problem.committed:
                if allowed:
                    pop[c_idx] = c.set(i, rng.choice(allowed))
            elif c.genes[i] is None:
                pop[c_idx] = c.set(i, rng.choice(allowed))
            else:
                pop[c_idx] = c.set(i, None)
    for c_idx in range(1, n):
        if rng.random() < cfg.gamma:
            pop[c_idx] = problem.uniform_chromosome(rng)
    return pop


@dataclass
class AdmissionOutcome:
    best: Chromosome
    profit: int  # revenue of all admitted requests minus fleet cost, cents
    baseline_profit: int | None  # None when the forced genes alone are infeasible
    baseline_cost: int | None
    total_cost: int
    revenue: int
    schedules: dict
    assignment: dict
    admitted: tuple
    rejected: tuple
    excluded: tuple
    trace: list = field(default_factory=list)  # (generation, best, mean)

    @property
    def marginal_profit(self) -> int:
        """Profit gained over keeping only the forced commitments."""
        if self.baseline_profit is None:
            return None
        return self.profit - self.baseline_profit

    def to_dict(self) -> dict:
        return {
            "profit_cents": self.profit,
            "baseline_profit_cents": self.baseline_profit,
            "marginal_profit_cents": self.marginal_profit,
            "revenue_cents": self.revenue,
            "cost_cents": self.total_cost,
            "admitted": list(self.admitted),
            "rejected": list(self.rejected),
            "excluded": list(self.excluded),
            "assignment": dict(sorted(self.assignment.items())),
            "schedules": {k: s.to_dict() for k, s in sorted(self.schedules.items())},
        }


def _outcome(problem: AdmissionProblem, best: Chromosome, trace: list) -> AdmissionOutcome:
    base = problem.baseline()
    base_fit = problem.fitness(base)
    base_res = problem.result(base)
    best_fit = problem.fitness(best)
    res = problem.result(best)
    admitted = tuple(problem.ids[i] for i, g in enumerate(best.genes) if g is not None)
    return AdmissionOutcome(
        best=best,
        profit=best_fit,
        baseline_profit=None if base_res is None else base_fit,
        baseline_cost=None if base_res is None else base_res.total_cost,
        total_cost=res.total_cost,
        revenue=best_fit + res.total_cost,
        schedules=dict(res.schedules),
        assignment=dict(res.assignment),
        admitted=admitted,
        rejected=tuple(problem.ids[i] for i in problem.free if best.genes[i] is None),
        excluded=tuple(problem.ids[i] for i in sorted(problem.excluded)),
        trace=trace,
    )


def _stats(ranked) -> tuple:
    fits = [f for _, f in ranked]
    return ranked[0][1], float(Fraction(sum(fits), len(fits)))


def run_admission(pool: Iterable[Request], vehicles: Iterable[Vehicle], rn: ReducedNetwork,
                  cfg: GAConfig = GAConfig(), *, problem: AdmissionProblem | None = None,
                  **kwargs) -> AdmissionOutcome:
    """Genetic search for the most profitable admission decision.

    Extra keyword arguments (tabu, discount, cents_per_mile, coordinator)
    go to AdmissionProblem. The forced-only decision is always a candidate,
    so the returned profit never falls below it.
    """
    if problem is None:
        problem = AdmissionProblem(pool, vehicles, rn, **kwargs)
    base = problem.baseline()
    if problem.fitness(base) is INFEASIBLE:
        raise InfeasibleError("forced commitments alone cannot be scheduled")
    rng = random.Random(cfg.seed)
    pop = init_population(problem, cfg, rng)
    ranked = rank(pop, problem.evaluate_many(pop))
    trace = [(0, *_stats(ranked))]
    for gen in range(1, cfg.generations + 1):
        backup = list(ranked)
        survivors, pairs = select_survivors_and_pair(ranked, cfg.x_rate, rng)
        n_children = cfg.n_pop - len(survivors)
        children = []
        for a, b in pairs:
            children.extend(crossover(survivors[a][0], survivors[b][0], problem, rng))
        pop = [c for c, _ in survivors] + children[:n_children]
        pop = mutate(pop, problem, cfg, rng)
        fits = problem.evaluate_many(pop)
        for n, f in enumerate(fits):
            if f is INFEASIBLE:
                pop[n], fits[n] = backup[n]
        ranked = rank(pop, fits)
        trace.append((gen, *_stats(ranked)))
    best = ranked[0][0]
    if problem.fitness(base) > ranked[0][1]:
        best = base
    return _outcome(problem, best, trace)


def brute_force_admission(pool: Iterable[Request], vehicles: Iterable[Vehicle], rn: ReducedNetwork, *,
                          cap: int = DEFAULT_ORACLE_CAP, problem: AdmissionProblem | None = None,
                          **kwargs) -> AdmissionOutcome:
    """Exhaustive optimum over every admission decision (small pools only).

    Ties go to the smallest chromosome in gene order.
    """
    pool = list(pool)
    if problem is None:
        if len(pool) > cap:
            raise OracleCapExceeded(f"pool of {len(pool)} exceeds the oracle cap of {cap}")
        problem = AdmissionProblem(pool, vehicles, rn, **kwargs)
    elif len(problem.ids) > cap:
        raise OracleCapExceeded(f"pool of {len(problem.ids)} exceeds the oracle cap of {cap}")
    options = []
    for i in range(len(problem.ids)):
        if i in problem.owner:
            options.append((problem.owner[i],))
        elif i in problem.committed:
            options.append(problem.allowed[i] or (problem.committed[i],))
        elif i in problem.excluded:
            options.append((None,))
        else:
            options.append((None,) + problem.allowed[i])
    cands = [Chromosome(g) for g in itertools.product(*options)]
    fits = problem.evaluate_many(cands)
    best = None
    for c, f in zip(cands, fits):
        if f is INFEASIBLE:
            continue
        if best is None or (_neg(f), c.key) < (_neg(best[1]), best[0].key):
            best = (c, f)
    if best is None:
        raise InfeasibleError("no feasible admission decision")
    return _outcome(problem, best[0], [])
