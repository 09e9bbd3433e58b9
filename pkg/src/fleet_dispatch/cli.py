"""Command-line entry point: ``fleet-dispatch {gen,schedule,admit,simulate}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import io
from .admission import AdmissionProblem, GAConfig, brute_force_admission, run_admission
from .errors import (ConstraintViolation, InfeasibleError, InfeasibleRouteError, InputError,
                     OracleCapExceeded)
from .fleet import DEFAULT_ORACLE_CAP, MODES, Coordinator, brute_force_fleet, solve_assignment
from .network import reduce
from .scenario import ScenarioParams, generate_scenario, rebucket
from .simulator import run_horizon, series
from .vehicle_scheduler import solve_vehicle

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4
WORKERS_ENV = "FLEET_DISPATCH_WORKERS"


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--workers", type=_positive(int), default=_default_workers(),
                   help=f"worker processes for distributed mode (env {WORKERS_ENV})")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return p


def _ga_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--n-pop", type=int)
    g.add_argument("--x-rate", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--generations", type=int)
    g.add_argument("--discount", type=float)


def _ga_config(base: GAConfig, args) -> GAConfig:
    over = {k: getattr(args, k) for k in ("n_pop", "x_rate", "mu", "gamma", "generations")
            if getattr(args, k) is not None}
    return replace(base, **over)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="fleet-dispatch", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a synthetic scenario")
    d = ScenarioParams()
    g.add_argument("--requests", type=int, default=d.requests)
    g.add_argument("--vehicles", type=int, default=d.vehicles)
    g.add_argument("--per-interval", type=int, default=d.per_interval)
    g.add_argument("--interval-seconds", type=float, default=d.interval_seconds)
    g.add_argument("--grid", type=int, default=d.grid)
    g.add_argument("--spacing", type=float, default=d.spacing)
    g.add_argument("--stations", type=int, default=d.stations)
    g.add_argument("--name", default="scenario.json")
    _ga_flags(g)

    s = sub.add_parser("schedule", parents=[common], help="schedule a fixed assignment")
    s.add_argument("scenario", type=Path)
    src = s.add_mutually_exclusive_group()
    src.add_argument("--assignment", type=Path, help="JSON map of request id to vehicle id")
    src.add_argument("--oracle", action="store_true", help="search every assignment (small pools)")
    s.add_argument("--interval", type=int, default=None, help="use only this interval's requests")
    s.add_argument("--mode", choices=MODES, default="cumulative")
    s.add_argument("--timing", action="store_true", help="print wall-clock time per execution mode")
    s.add_argument("--cap", type=int, default=DEFAULT_ORACLE_CAP)

    a = sub.add_parser("admit", parents=[common], help="admission control for one interval")
    a.add_argument("scenario", type=Path)
    a.add_argument("--interval", type=int, default=0)
    a.add_argument("--repeats", type=_positive(int), default=1)
    a.add_argument("--oracle", action="store_true", help="also run the exhaustive search")
    a.add_argument("--cap", type=int, default=DEFAULT_ORACLE_CAP)
    a.add_argument("--mode", choices=MODES, default="cumulative")
    _ga_flags(a)

    m = sub.add_parser("simulate", parents=[common], help="run the scenario horizon")
    m.add_argument("scenario", type=Path)
    m.add_argument("--per-interval", type=_positive(int), default=None,
                   help="re-split the request stream into intervals of this many requests")
    m.add_argument("--interval-seconds", type=_positive(float), default=None)
    m.add_argument("--mode", choices=MODES, default="cumulative")
    _ga_flags(m)
    return ap


def _pool_network(sc, requests):
    keys = {k.location for k in sc.vehicles}
    for r in requests:
        keys |= {r.pickup, r.dropoff}
    return reduce(sc.network, keys)


def _fleet_report(res, sc) -> dict:
    return {
        "format_version": io.FORMAT_VERSION,
        "cents_per_mile": sc.fuel_cents_per_mile,
        "total_cost_cents": res.total_cost,
        "total_cost_units": res.total_units,
        "assignment": dict(sorted(res.assignment.items())),
        "schedules": {k: s.to_dict() for k, s in sorted(res.schedules.items())},
    }


def _explain_infeasible(assign, sc, requests, rn) -> str:
    rmap = {r.id: r for r in requests}
    vmap = {k.id: k for k in sc.vehicles}
    groups: dict = {}
    for rid, vid in assign.items():
        groups.setdefault(vid, []).append(rid)
    for vid in sorted(groups):
        if solve_vehicle(vmap[vid], [rmap[r] for r in groups[vid]], rn) is None:
            return f"vehicle {vid} cannot serve requests {sorted(groups[vid])}"
    return "assignment is infeasible"


def cmd_gen(args) -> int:
    ga = _ga_config(GAConfig(), args)
    params = ScenarioParams(requests=args.requests, vehicles=args.vehicles, per_interval=args.per_interval,
                            interval_seconds=args.interval_seconds, grid=args.grid, spacing=args.spacing,
                            stations=args.stations, ga=ga,
                            **({"discount": args.discount} if args.discount is not None else {}))
    seed = args.seed if args.seed is not None else 0
    sc = generate_scenario(seed, params)
    path = io.save_scenario(args.out / args.name, sc)
    print(f"scenario {path}: {len(sc.arrivals)} requests, {len(sc.vehicles)} vehicles, "
          f"{sc.horizon} intervals, seed {seed}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    sc = io.load_scenario(args.scenario)
    requests = sc.requests if args.interval is None else sc.arrivals_at(args.interval)
    rn = _pool_network(sc, requests)
    if args.oracle:
        with Coordinator(rn, args.mode, args.workers) as coord:
            res = brute_force_fleet(requests, sc.vehicles, rn, cap=args.cap,
                                    cents_per_mile=sc.fuel_cents_per_mile, coordinator=coord)
        if res is None:
            raise CliError(EXIT_INFEASIBLE, "no assignment serves every request")
    else:
        if args.assignment is None:
            raise CliError(EXIT_USAGE, "schedule needs --assignment FILE or --oracle")
        data = io.read_json(args.assignment)
        assign = data.get("assignment", data) if isinstance(data, dict) else None
        if not isinstance(assign, dict):
            raise InputError("assignment file must map request ids to vehicle ids")
        assign = {str(k): str(v) for k, v in assign.items() if k != "format_version"}
        known = {r.id: r for r in sc.requests}
        missing = sorted(set(assign) - set(known))
        if missing:
            raise InputError(f"unknown requests in assignment: {missing}")
        requests = [known[rid] for rid in sorted(assign)]
        rn = _pool_network(sc, requests)
        timings = {}
        results = {}
        for mode in (MODES if args.timing else (args.mode,)):
            with Coordinator(rn, mode, args.workers, cache=False) as coord:
                t0 = time.perf_counter()
                results[mode] = solve_assignment(assign, sc.vehicles, requests, rn, coordinator=coord,
                                                 cents_per_mile=sc.fuel_cents_per_mile)
                timings[mode] = time.perf_counter() - t0
        for mode, t in timings.items():
            if args.timing:
                print(f"{mode}: {t:.4f} s")
        res = results[args.mode]
        if res is None:
            raise CliError(EXIT_INFEASIBLE, _explain_infeasible(assign, sc, requests, rn))
    path = io.write_json(args.out / "schedules.json", _fleet_report(res, sc))
    print(f"total cost {res.total_cost} cents over {len(res.schedules)} vehicles -> {path}")
    return EXIT_OK


def _normalized(value, optimum):
    if optimum is None:
        return ""
    if optimum == 0:
        return 1.0 if value == 0 else ""
    return value / optimum


def cmd_admit(args) -> int:
    sc = io.load_scenario(args.scenario)
    pool = sc.arrivals_at(args.interval)
    rn = _pool_network(sc, pool)
    discount = args.discount if args.discount is not None else sc.discount
    ga = _ga_config(sc.ga, args)
    base_seed = args.seed if args.seed is not None else ga.seed
    with Coordinator(rn, args.mode, args.workers) as coord:
        problem = AdmissionProblem(pool, sc.vehicles, rn, discount=discount,
                                   cents_per_mile=sc.fuel_cents_per_mile, coordinator=coord)
        oracle = None
        if args.oracle:
            oracle = brute_force_admission(pool, sc.vehicles, rn, cap=args.cap, problem=problem)
        runs = []
        for n in range(args.repeats):
            seed = base_seed + n
            runs.append((seed, run_admission(pool, sc.vehicles, rn, replace(ga, seed=seed), problem=problem)))
    opt = oracle.profit if oracle else None
    rows = [(n + 1, seed, gen, best, repr(mean), _normalized(best, opt))
            for n, (seed, out) in enumerate(runs) for gen, best, mean in out.trace]
    io.write_csv(args.out / "trace.csv", ["run", "seed", "generation", "best", "mean", "normalized"], rows)
    report = {
        "format_version": io.FORMAT_VERSION,
        "interval": args.interval,
        "ga": ga.to_dict(),
        "discount": discount,
        "runs": [{"seed": seed, **out.to_dict()} for seed, out in runs],
        "oracle": oracle.to_dict() if oracle else None,
    }
    path = io.write_json(args.out / "admission.json", report)
    best = max(out.profit for _, out in runs)
    extra = f", optimum {opt}" if oracle else ""
    print(f"{len(pool)} requests, {args.repeats} runs, best profit {best} cents{extra} -> {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = io.load_scenario(args.scenario)
    if args.per_interval is not None:
        sc = rebucket(sc, args.per_interval, args.interval_seconds)
    elif args.interval_seconds is not None:
        sc = replace(sc, interval_seconds=args.interval_seconds)
    ga = _ga_config(sc.ga, args)
    if args.seed is not None:
        ga = replace(ga, seed=args.seed)
    sc = replace(sc, ga=ga, discount=args.discount if args.discount is not None else sc.discount)
    reports = run_horizon(sc, args.mode, args.workers)
    for rep in reports:
        io.write_json(args.out / f"interval_{rep.index:03d}.json",
                      {"format_version": io.FORMAT_VERSION, **rep.to_dict()})
    io.write_json(args.out / "reports.json", {"format_version": io.FORMAT_VERSION,
                                              "intervals": [rep.to_dict() for rep in reports]})
    path = io.write_csv(args.out / "series.csv",
                        ["interval", "admitted", "carried", "profit_cents", "cumulative_profit_cents"],
                        series(reports))
    total = sum(len(r.newly_admitted) for r in reports)
    print(f"{len(reports)} intervals, {total} admitted, cumulative profit "
          f"{reports[-1].cumulative_profit} cents -> {path}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "schedule": cmd_schedule, "admit": cmd_admit, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InfeasibleError, InfeasibleRouteError, ConstraintViolation) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OracleCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
