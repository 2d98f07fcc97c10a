import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hadamard_lab import shapes

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def circle_05():
    return shapes.circle(0.5, 1024, -1.0)


@pytest.fixture(scope="session")
def sphere_07():
    return shapes.geodesic_sphere(0.7, 4, -1.0)


@pytest.fixture(scope="session")
def sphere_07_l3():
    return shapes.geodesic_sphere(0.7, 3, -1.0)


@pytest.fixture(scope="session")
def racetrack_small():
    # long enough to break the curve inequality, coarse enough to be quick
    return shapes.racetrack(0.2, 18.0, 2048, -1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture(scope="session")
def acceptance():
    def record(num, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {name}: {detail}"
        ACCEPTANCE[num] = line
        print(line)
        return ok
    return record
