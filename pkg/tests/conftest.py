"""Shared simulation runs; each is computed once per test session."""

import time

import numpy as np
import pytest

from ibvsquad import presets
from ibvsquad.simulator import run_scenario

RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def record():
    def _record(k, ok, detail):
        RESULTS[k] = (bool(ok), detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


@pytest.fixture(scope="session")
def nominal_run():
    s = presets.nominal_scenario()
    t0 = time.perf_counter()
    log = run_scenario(s)
    wall = time.perf_counter() - t0
    return s, log, wall


@pytest.fixture(scope="session")
def sweep_runs():
    out = []
    for start in presets.SWEEP_STARTS:
        s = presets.nominal_scenario(start=start)
        out.append((start, s, run_scenario(s)))
    return out


def theorem1_starts(n=10, seed=2024):
    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(n):
        d_t = rng.uniform(0.5, 3.0)
        x, y = rng.uniform(-1.0, 1.0, 2)
        starts.append((float(x), float(y), -float(d_t)))
    return starts


@pytest.fixture(scope="session")
def theorem1_runs():
    out = []
    for start in theorem1_starts():
        # the landing law alone over the full horizon, no shutdown trigger
        s = presets.landing_scenario(start=start, shutdown=False)
        out.append((start, s, run_scenario(s)))
    return out


def prop2_starts(n=10, seed=7):
    rng = np.random.default_rng(seed)
    w = presets.reference_window()
    starts = []
    for _ in range(n):
        d_o = rng.uniform(1.0, 3.0)
        dy, dz = rng.uniform(-0.8, 0.8, 2)
        starts.append(tuple(w.center - d_o * w.normal + dy * w.u_axis + dz * w.rho_axis))
    return starts


@pytest.fixture(scope="session")
def prop2_runs():
    out = []
    for start in prop2_starts():
        s = presets.window_scenario(start=start)
        out.append((start, s, run_scenario(s)))
    return out


@pytest.fixture(scope="session")
def prop1_horizontal_run():
    s = presets.prop1_horizontal_scenario()
    return s, run_scenario(s)


@pytest.fixture(scope="session")
def prop1_vertical_run():
    s = presets.prop1_vertical_scenario()
    return s, run_scenario(s)
