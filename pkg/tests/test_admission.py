import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleet_dispatch.admission import (INFEASIBLE, AdmissionProblem, Chromosome, GAConfig, brute_force_admission,
                                      crossover, init_population, mutate, mutation_count, rank, rank_weights,
                                      revenue, run_admission, select_survivors_and_pair)
from fleet_dispatch.domain import Request, Vehicle
from fleet_dispatch.errors import InfeasibleError, InputError, OracleCapExceeded
from fleet_dispatch.network import reduce
from fleet_dispatch.vehicle_scheduler import solve_vehicle
from instances import instance


def R(rid, s, d, fare=5000, e=None, l=None, q=1):
    return Request(rid, s, d, None, e, l, q, fare=fare)


@pytest.fixture
def rn(line_net):
    return reduce(line_net, set(range(5)))


@pytest.fixture
def fleet():
    return [Vehicle("a", 0, 0, 5000, 4), Vehicle("b", 3, 0, 5000, 4), Vehicle("c", 0, 4000, 5000, 4)]


def test_revenue_examples():
    assert revenue(R("r", 0, 1, fare=1000)) == 500
    assert revenue(R("r", 0, 1, fare=1000), discount=0) == 1000
    assert revenue(R("r", 0, 1, fare=999)) == 500
    with pytest.raises(InputError):
        revenue(R("r", 0, 1), discount=1.5)


def test_ga_config_validation_and_keys():
    cfg = GAConfig(n_pop=8, seed=3)
    assert GAConfig.from_dict(cfg.to_dict()) == cfg
    for bad in (dict(n_pop=3), dict(x_rate=1.0), dict(mu=-0.1), dict(gamma=2), dict(generations=0)):
        with pytest.raises(InputError):
            GAConfig(**bad)
    with pytest.raises(InputError):
        GAConfig.from_dict({"population": 4})


def test_infeasible_sorts_below_numbers():
    assert INFEASIBLE < -10**12 and not INFEASIBLE > 0
    assert sorted([3, INFEASIBLE, -1]) == [INFEASIBLE, -1, 3]


def test_fitness_examples(rn, fleet):
    r = R("r", 1, 2, fare=1000)
    p = AdmissionProblem([r], fleet, rn)
    assert p.fitness(Chromosome((None,))) == 0
    solo = solve_vehicle(fleet[0], [r], rn).cents(16)
    assert p.fitness(Chromosome(("a",))) == 500 - solo
    late = R("late", 1, 2, e=0, l=300)
    p2 = AdmissionProblem([late], fleet, rn)
    assert p2.tabu["late"] == {"c"}
    assert p2.fitness(Chromosome(("c",))) is INFEASIBLE
    with pytest.raises(InputError):
        p2.fitness(Chromosome(()))


def test_init_population_examples(rn, fleet):
    rng = random.Random(0)
    p = AdmissionProblem([R("r", 1, 2, e=0, l=300)], fleet, rn)
    pop = init_population(p, GAConfig(), rng)
    assert all(c.genes[0] in ("a", "b") for c in pop)
    assert {c.genes[0] for c in pop} == {"a", "b"}
    empty = AdmissionProblem([], fleet, rn)
    assert init_population(empty, GAConfig(n_pop=4), rng) == [Chromosome(())] * 4


def test_globally_inadmissible_never_set(rn, fleet):
    reqs = [R(f"r{i}", i, i + 1) for i in range(4)] + [R("x", 1, 2, e=0, l=10)]
    p = AdmissionProblem(reqs, fleet, rn)
    bad = p.ids.index("x")
    assert bad in p.excluded and bad not in p.mutable
    rng = random.Random(1)
    cfg = GAConfig(mu=1.0, gamma=0.5)
    pop = init_population(p, cfg, rng)
    for _ in range(10):
        pop = mutate(pop, p, cfg, rng)
        assert all(c.genes[bad] is None for c in pop)


def test_selection_arithmetic():
    ranked = [(Chromosome((i,)), 10 - i) for i in range(4)]
    survivors, pairs = select_survivors_and_pair(ranked, 0.5, random.Random(0))
    assert len(survivors) == 2 and len(pairs) == 1
    assert set(pairs[0]) == {0, 1}


def test_rank_weights_ties_and_order():
    assert rank_weights([5, 4, 3]) == [3, 2, 1]
    assert rank_weights([5, 5, 5, 5]) == [2.5] * 4
    assert rank_weights([9, 7, 7, 1]) == [4, 2.5, 2.5, 1]


def test_pairing_frequency_follows_rank_weights():
    ranked = [(Chromosome((i,)), 100 - i) for i in range(8)]
    rng = random.Random(7)
    counts = Counter()
    for _ in range(10_000):
        _, pairs = select_survivors_and_pair(ranked, 0.5, rng, n_children=2)
        counts[pairs[0][0]] += 1
    # first parent is drawn with weights 4:3:2:1
    for i, w in enumerate([4, 3, 2, 1]):
        assert counts[i] / 10_000 == pytest.approx(w / 10, abs=0.02)
    assert counts[0] > counts[1] > counts[2] > counts[3]


def test_rank_prefers_fitness_then_genes():
    a, b, c = Chromosome(("b",)), Chromosome((None,)), Chromosome(("a",))
    out = rank([a, b, c], [1, INFEASIBLE, 1])
    assert [x for x, _ in out] == [c, a, b]


def test_crossover_examples(rn, fleet):
    reqs = [R("r0", 0, 1), R("r1", 1, 2, e=0, l=300), R("r2", 3, 4)]
    p = AdmissionProblem(reqs, fleet, rn)
    rng = random.Random(0)
    x = Chromosome(("a", None, None))
    assert crossover(x, x, p, rng) == (x, x)
    empty = Chromosome((None, None, None))
    child, back = crossover(empty, Chromosome((None, None, "b")), p, rng)
    assert child == Chromosome(("b", "b", "b"))
    assert back == Chromosome((None, None, "b"))
    # c can take nothing the empty parent lacks
    p2 = AdmissionProblem([reqs[1]], fleet, rn)
    assert crossover(Chromosome((None,)), Chromosome(("c",)), p2, rng)[0] == Chromosome((None,))


def test_mutation_count_rounding():
    assert mutation_count(0.15, 16, 10) == 23
    assert mutation_count(0, 16, 10) == 0


def test_mutation_noop_and_elite(rn, fleet):
    reqs = [R(f"r{i}", i, i + 1) for i in range(4)]
    p = AdmissionProblem(reqs, fleet, rn)
    rng = random.Random(2)
    pop = init_population(p, GAConfig(), rng)
    assert mutate(pop, p, GAConfig(mu=0, gamma=0), rng) == pop
    out = mutate(pop, p, GAConfig(mu=1, gamma=1), rng)
    assert out[0] == pop[0] and out != pop


def test_forced_genes(rn):
    vs = [Vehicle("a", 1, 0, 5000, 4, in_service={"o"}), Vehicle("b", 0, 0, 5000, 4, assigned_unserved={"u"})]
    reqs = [R("o", 1, 3), R("u", 0, 2), R("f", 2, 3)]
    p = AdmissionProblem(reqs, vs, rn)
    assert p.ids == ("f", "o", "u")
    assert p.baseline() == Chromosome((None, "a", "b"))
    assert p.owner == {p.ids.index("o"): "a"} and p.committed == {p.ids.index("u"): "b"}
    rng = random.Random(0)
    cfg = GAConfig(mu=1.0, gamma=0.5)
    pop = init_population(p, cfg, rng)
    for _ in range(20):
        pop = mutate(pop, p, cfg, rng)
        assert all(p.is_valid(c) for c in pop)
    with pytest.raises(InputError):
        AdmissionProblem(reqs[1:], vs, rn)


def test_readmits_forced_pool(rn):
    vs = [Vehicle("a", 0, 0, 5000, 4, assigned_unserved={"u"}), Vehicle("b", 2, 0, 5000, 4)]
    out = run_admission([R("u", 2, 3, fare=100)], vs, rn, GAConfig(generations=5))
    assert out.admitted == ("u",)
    # reassigned to the vehicle already at the pickup
    assert out.assignment == {"u": "b"}
    assert out.profit >= out.baseline_profit


def test_single_inadmissible_request(rn, fleet):
    out = run_admission([R("x", 1, 2, e=0, l=10)], fleet, rn, GAConfig(generations=3))
    assert out.profit == 0 and out.admitted == () and out.excluded == ("x",)


def test_infeasible_commitments_raise(rn):
    vs = [Vehicle("a", 0, 0, 50, 4, in_service={"o"})]
    with pytest.raises(InfeasibleError):
        run_admission([R("o", 0, 4)], vs, rn)
    with pytest.raises(InfeasibleError):
        brute_force_admission([R("o", 0, 4)], vs, rn)


def test_brute_force_examples(rn, fleet):
    assert brute_force_admission([], fleet, rn).profit == 0
    cheap = R("r", 1, 2, fare=10)
    out = brute_force_admission([cheap], fleet, rn)
    assert out.profit == 0 and out.admitted == ()
    rich = R("r", 1, 2, fare=10_000)
    out = brute_force_admission([rich], fleet, rn)
    cost = min(solve_vehicle(k, [rich], rn).cents(16) for k in fleet[:2])
    assert out.profit == 5000 - cost and out.admitted == ("r",)
    with pytest.raises(OracleCapExceeded):
        brute_force_admission([R(f"r{i}", 0, 1) for i in range(3)], fleet, rn, cap=2)


def test_ga_finds_optimum_on_small_case(rn, fleet):
    reqs = [R("r0", 0, 2, fare=900), R("r1", 1, 3, fare=800), R("r2", 3, 4, fare=50)]
    problem = AdmissionProblem(reqs, fleet, rn)
    want = brute_force_admission(reqs, fleet, rn, problem=problem).profit
    runs = [run_admission(reqs, fleet, rn, GAConfig(seed=s), problem=problem) for s in range(1, 21)]
    assert all(o.profit <= want for o in runs)
    assert sum(o.profit == want for o in runs) >= 18
    out = runs[0]
    assert [g for g, *_ in out.trace] == list(range(41))
    bests = [b for _, b, _ in out.trace]
    assert bests == sorted(bests)


def test_outcome_serializes(rn, fleet):
    out = run_admission([R("r", 1, 2)], fleet, rn, GAConfig(generations=2))
    d = out.to_dict()
    assert d["profit_cents"] == out.profit
    assert d["marginal_profit_cents"] == out.profit


@given(st.integers(0, 10**6), st.integers(0, 4), st.integers(0, 10))
@settings(max_examples=30, deadline=None)
def test_profit_never_negative(seed, n, ga_seed):
    rn_, vehicles, reqs = instance(seed, n_requests=n, n_vehicles=2)
    bf = brute_force_admission(reqs, vehicles, rn_)
    ga = run_admission(reqs, vehicles, rn_, GAConfig(generations=5, seed=ga_seed))
    assert bf.profit >= 0 and ga.profit >= 0
    assert ga.profit <= bf.profit


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_more_requests_never_less_profit(seed):
    rn_, vehicles, reqs = instance(seed, n_requests=4, n_vehicles=2)
    small = brute_force_admission(reqs[:2], vehicles, rn_).profit
    large = brute_force_admission(reqs, vehicles, rn_).profit
    assert small <= large
