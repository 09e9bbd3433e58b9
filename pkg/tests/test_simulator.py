import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleet_dispatch.domain import RequestState
from fleet_dispatch.errors import InputError
from fleet_dispatch.scenario import ScenarioParams, generate_scenario
from fleet_dispatch.simulator import (TERMINAL, apply_no_show, apply_traffic_update, classify_traffic_update,
                                      initial_state, run_horizon, run_horizon_state, run_interval, series,
                                      state_violations)
from fleet_dispatch.validate import schedule_violations

SMALL = ScenarioParams(requests=20, per_interval=4, grid=6)


def small(seed, **kw):
    return generate_scenario(seed, dataclasses.replace(SMALL, **kw))


def advance_to_commitments(sc, need):
    """Run intervals until ``need(state)`` holds; returns the state or None."""
    state = initial_state(sc)
    for n in range(sc.horizon):
        state, _ = run_interval(state, sc.arrivals_at(n))
        if need(state):
            return state
    return None


def test_idle_interval():
    sc = small(0)
    state = initial_state(sc)
    after, rep = run_interval(state, [])
    assert rep.admitted == () and rep.newly_admitted == () and rep.cumulative_profit == 0
    assert after.clock == state.clock + sc.interval_seconds
    assert after.interval == 1


def test_vehicles_idle_forward_in_time():
    sc = small(0)
    state = initial_state(sc)
    after, _ = run_interval(state, [])
    for vid, k in after.vehicles.items():
        assert k.ready_time == after.clock
        assert k.max_time - k.ready_time == state.vehicles[vid].max_time - state.vehicles[vid].ready_time


def test_carryover_enters_next_pool():
    sc = small(0)
    state = initial_state(sc)
    for n in range(3):
        state, rep = run_interval(state, sc.arrivals_at(n))
        for rid in rep.carried:
            assert state.status[rid] == RequestState.CARRIED_OVER
            assert rid in state.pending
    state, rep = run_interval(state, [])
    assert set(rep.admitted) | set(rep.carried) | set(rep.excluded) >= set(state.pending)


def test_horizon_one_is_one_interval():
    sc = dataclasses.replace(small(2), horizon=1)
    reports = run_horizon(sc)
    _, rep = run_interval(initial_state(sc), sc.arrivals_at(0))
    assert len(reports) == 1
    assert reports[0].to_dict() == rep.to_dict()


def test_zero_fare_earns_nothing():
    reports = run_horizon(small(3, base_fare=0, fare_per_mile=0))
    assert all(r.newly_admitted == () for r in reports)
    assert reports[-1].cumulative_profit == 0


def test_reassignment_never_costs_more_than_keeping():
    checked = 0
    for seed in range(6):
        sc = small(seed)
        state = initial_state(sc)
        for n in range(sc.horizon + 3):
            had = any(k.assigned_unserved for k in state.vehicles.values())
            nxt, rep = run_interval(state, sc.arrivals_at(n))
            if had and not rep.newly_admitted:
                # the old pairing is the forced baseline, so cost can only fall
                assert nxt.ledger.cost <= state.ledger.cost
                checked += 1
            state = nxt
    assert checked > 0


def test_every_commitment_validates_and_state_is_sound():
    sc = small(4)
    state = initial_state(sc)
    for n in range(sc.horizon):
        state, rep = run_interval(state, sc.arrivals_at(n))
        assert state_violations(state) == []
        for vid, c in rep.commitments.items():
            assert schedule_violations(c.schedule, c.vehicle, c.served, c.rn) == []


def test_conservation_over_horizon():
    sc = small(5)
    state, reports = run_horizon_state(sc)
    for _ in range(30):
        state, _ = run_interval(state, [])
    ids = {r.id for r in sc.requests}
    assert set(state.status) == ids
    assert all(state.status[rid] in TERMINAL or rid in state.pending for rid in ids)


def test_series_rows():
    reports = run_horizon(small(6))
    rows = series(reports)
    assert [r[0] for r in rows] == list(range(5))
    assert rows[-1][4] == reports[-1].cumulative_profit


@given(st.integers(0, 10**4))
@settings(max_examples=10, deadline=None)
def test_cumulative_profit_nondecreasing(seed):
    reports = run_horizon(small(seed))
    profits = [r.cumulative_profit for r in reports]
    assert profits == sorted(profits) and profits[0] >= 0
    assert all(r.interval_profit >= 0 for r in reports)


# -- disturbances --

def state_with_unserved(seed=1):
    return advance_to_commitments(small(seed), lambda s: any(k.assigned_unserved for k in s.vehicles.values()))


def edge_into_unserved_pickup(state):
    for vid, c in sorted(state.commitments.items()):
        k = state.vehicles[vid]
        for n, s in enumerate(c.schedule.stops):
            if s.kind == "pickup" and s.request in k.assigned_unserved and s.time > state.clock:
                prev = c.schedule.stops[n - 1]
                path = c.rn.leg(prev.vertex, s.vertex).path
                if len(path) > 1:
                    return (path[-2], path[-1]), s.request
    return None


def test_traffic_on_unused_edge():
    state = state_with_unserved()
    used = set()
    for c in state.commitments.values():
        for a, b in zip(c.schedule.stops, c.schedule.stops[1:]):
            p = c.rn.leg(a.vertex, b.vertex).path
            used |= set(zip(p, p[1:]))
    edge = next((e.i, e.j) for e in state.network.edges if (e.i, e.j) not in used)
    assert classify_traffic_update(state, edge) == {"unserved": [], "in_service": []}
    after = apply_traffic_update(state, edge, 999.0)
    assert after.network.edge_map[edge].time == 999.0
    assert after.status == state.status and after.ledger == state.ledger
    assert after.commitments == state.commitments


def test_traffic_sends_unserved_back_to_pool():
    state = state_with_unserved()
    edge, rid = edge_into_unserved_pickup(state)
    touched = classify_traffic_update(state, edge)
    assert rid in touched["unserved"]
    after = apply_traffic_update(state, edge, 5000.0)
    assert after.status[rid] == RequestState.NEW and rid in after.pending
    assert after.ledger.revenue < state.ledger.revenue
    assert not any(rid in k.assigned_unserved for k in after.vehicles.values())
    assert state_violations(after) == []
    # the request is reconsidered in the next interval
    nxt, rep = run_interval(after, [])
    assert rid in set(rep.admitted) | set(rep.carried) | set(rep.excluded)
    assert state_violations(nxt) == []


def test_traffic_on_in_service_leg_sets_compensation():
    sc = small(0)
    state = advance_to_commitments(sc, lambda s: any(k.in_service for k in s.vehicles.values()))
    hit = None
    for vid, c in sorted(state.commitments.items()):
        k = state.vehicles[vid]
        for n, s in enumerate(c.schedule.stops):
            if s.kind == "dropoff" and s.request in k.in_service and s.time > state.clock and n > 0:
                path = c.rn.leg(c.schedule.stops[n - 1].vertex, s.vertex).path
                if len(path) > 1:
                    hit = ((path[-2], path[-1]), s.request, vid)
                    break
        if hit:
            break
    edge, rid, vid = hit
    after = apply_traffic_update(state, edge, 5000.0)
    assert rid in after.compensated
    assert after.commitments[vid].schedule == state.commitments[vid].schedule
    assert after.status[rid] == RequestState.IN_SERVICE
    nxt, _ = run_interval(after, [])
    assert state_violations(nxt) == []


def test_traffic_on_missing_edge():
    state = state_with_unserved()
    with pytest.raises(InputError):
        apply_traffic_update(state, ("nope", "nada"), 1.0)


def test_no_show_cases():
    state = state_with_unserved()
    vid, k = next((vid, k) for vid, k in sorted(state.vehicles.items()) if k.assigned_unserved)
    rid = sorted(k.assigned_unserved)[0]
    assert apply_no_show(state, rid, 0) is state
    seats = state.requests[rid].seats
    with pytest.raises(InputError):
        apply_no_show(state, rid, seats + 1)
    with pytest.raises(InputError):
        apply_no_show(state, "zz", 1)

    if seats > 1:
        part = apply_no_show(state, rid, 1)
        before = state.commitments[vid].schedule.stops
        after = part.commitments[vid].schedule.stops
        inside = False
        for a, b in zip(before, after):
            if a.request == rid and a.kind == "pickup":
                inside = True
            elif a.request == rid and a.kind == "dropoff":
                inside = False
            assert b.occupancy == a.occupancy - (1 if inside else 0)
        assert state_violations(part) == []

    gone = apply_no_show(state, rid, seats)
    assert gone.status[rid] == RequestState.COMPLETED_UNSERVED
    c = gone.commitments[vid]
    assert all(s.request != rid for s in c.schedule.stops)
    assert schedule_violations(c.schedule, c.vehicle, c.served, c.rn) == []
    assert state_violations(gone) == []
    with pytest.raises(InputError):
        apply_no_show(gone, rid, 1)


def test_partial_no_show_on_larger_party():
    for seed in range(20):
        state = state_with_unserved(seed)
        if state is None:
            continue
        for vid, k in sorted(state.vehicles.items()):
            for rid in sorted(k.assigned_unserved):
                if state.requests[rid].seats >= 2:
                    part = apply_no_show(state, rid, 1)
                    assert part.requests[rid].seats == state.requests[rid].seats - 1
                    assert state_violations(part) == []
                    nxt, _ = run_interval(part, [])
                    assert state_violations(nxt) == []
                    return
    pytest.fail("no multi-seat unserved request found")
