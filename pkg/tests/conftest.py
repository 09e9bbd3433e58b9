import os

import pytest

# every schedule the solver returns during the suite is re-checked by the validator
os.environ["FLEET_DISPATCH_VALIDATE"] = "1"

from fleet_dispatch import vehicle_scheduler  # noqa: E402

vehicle_scheduler.VALIDATE = True


@pytest.fixture
def line_net():
    """0 -> 1 -> 2 -> 3 -> 4, one mile and 100 s per edge, station at 4."""
    from fleet_dispatch.network import Edge, RoadNetwork
    edges = [Edge(i, i + 1, 1.0, 100.0) for i in range(4)] + [Edge(i + 1, i, 1.0, 100.0) for i in range(4)]
    return RoadNetwork(frozenset(range(5)), tuple(edges), frozenset([4]))


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(n, ok, detail):
        ACCEPTANCE[n] = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
        print(ACCEPTANCE[n])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE, key=lambda s: (int(s.rstrip("abc")), s)):
            terminalreporter.write_line(ACCEPTANCE[n])
