"""Compare the compiled and pure-Python single-vehicle search.

    python benchmarks/bench_kernel.py --instances 30 --requests 5
"""
import argparse
import random
import time
from dataclasses import replace

from fleet_dispatch import kernel
from fleet_dispatch.domain import Vehicle
from fleet_dispatch.network import reduce
from fleet_dispatch.scenario import ScenarioParams, generate_scenario
from fleet_dispatch.vehicle_scheduler import solve_vehicle


def instances(n, n_requests, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        sc = generate_scenario(rng.randrange(10**6), ScenarioParams(requests=n_requests, grid=6, window=1800))
        # open windows and generous ride limits keep the search from ending early
        reqs = [replace(r, earliest=None, latest=None, max_ride=r.max_ride * 4) for r in sc.requests]
        k = sc.vehicles[0]
        k = Vehicle(k.id, k.location, 0.0, 10**5, k.capacity)
        keys = {k.location} | {r.pickup for r in reqs} | {r.dropoff for r in reqs}
        out.append((k, reqs, reduce(sc.network, keys)))
    return out


def run(cases, backend, repeat):
    best = float("inf")
    results = None
    for _ in range(repeat):
        t = time.perf_counter()
        results = [solve_vehicle(k, reqs, rn, backend=backend) for k, reqs, rn in cases]
        best = min(best, time.perf_counter() - t)
    return best, results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=30)
    ap.add_argument("--requests", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cases = instances(args.instances, args.requests, args.seed)
    feasible = None
    rows = []
    for backend in sorted(kernel.BACKENDS):
        t, res = run(cases, backend, args.repeat)
        if feasible is None:
            feasible = res
        elif res != feasible:
            raise SystemExit(f"backend {backend} disagrees with the reference results")
        rows.append((backend, t))
    print(f"{args.instances} instances, {args.requests} requests each, "
          f"{sum(r is not None for r in feasible)} feasible")
    base = dict(rows).get("python")
    for backend, t in rows:
        speed = f"  x{base / t:.1f}" if base else ""
        print(f"{backend:>8}: {t * 1000:9.1f} ms{speed}")


if __name__ == "__main__":
    main()
