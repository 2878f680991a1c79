"""Shared fixtures.

The expensive end-to-end artifacts (the scaling sweeps and the long 2D
run) are computed once per session and shared by the acceptance tests.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from achesim import diagnostics as dg
from achesim import fields as fd
from achesim import semigroup as sg
from achesim.presets import remark_example
from achesim.shear import make_profile
from achesim.solver import RunSinks, SolverConfig, run
from achesim.spectral import GridSpec

NU_GRID = [1e-2, 1e-3, 1e-4, 1e-5]


@dataclass
class SweepResult:
    fit: sg.RateFit
    curves: dict
    wall_seconds: float


def _sweep(profile_name: str) -> SweepResult:
    curves: dict = {}
    t0 = time.perf_counter()
    fit = sg.scaling_fit(make_profile(profile_name), NU_GRID, mu=1.0, K=8, M=128,
                         curves_out=curves)
    return SweepResult(fit=fit, curves=curves, wall_seconds=time.perf_counter() - t0)


@pytest.fixture(scope="session")
def sin_sweep() -> SweepResult:
    return _sweep("sin")


@pytest.fixture(scope="session")
def sin3_sweep() -> SweepResult:
    return _sweep("sin3")


@dataclass
class LongRun:
    config: SolverConfig
    profile: object
    initial: fd.Field2D
    records: list
    final: object
    wall_seconds: float


def _long_run(profile_name: str) -> LongRun:
    grid = GridSpec(128, 128)
    config = SolverConfig(mu=1e-2, nu=1e-2, grid=grid, dt=2e-3, t_end=400.0,
                          series_stride=50, snapshot_stride=10**9)
    profile = make_profile(profile_name)
    initial = remark_example(grid, eps=0.1)
    records: list = []
    sinks = RunSinks(series_writer=records.append)
    t0 = time.perf_counter()
    final = run(config, initial, profile, sinks=sinks)
    return LongRun(config=config, profile=profile, initial=initial,
                   records=records, final=final,
                   wall_seconds=time.perf_counter() - t0)


@pytest.fixture(scope="session")
def acceptance_run() -> LongRun:
    """The end-to-end run: remark-example data, mu = nu = 1e-2, t_end = 400."""
    return _long_run("sin")


@pytest.fixture(scope="session")
def zero_shear_twin() -> LongRun:
    """Same data and parameters with the shear turned off."""
    return _long_run("zero")


@pytest.fixture(scope="session")
def acceptance_lambda(sin_sweep) -> float:
    """Analyzer rate at the mu*nu of the acceptance run (1e-2 * 1e-2)."""
    target = 1e-4
    idx = int(np.argmin(np.abs(sin_sweep.fit.nu_grid - target)))
    assert abs(sin_sweep.fit.nu_grid[idx] - target) < 1e-12
    return float(sin_sweep.fit.rates[idx])


_SCORECARD: list[str] = []


def criterion_line(n: int, ok: bool, detail: str) -> None:
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)  # captured; replayed by pytest on failure
    _SCORECARD.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Always show one PASS/FAIL line per acceptance criterion."""
    if _SCORECARD:
        terminalreporter.section("acceptance scorecard")
        for line in _SCORECARD:
            terminalreporter.write_line(line)
