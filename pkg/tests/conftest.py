"""Shared fixtures.

The expensive artifacts (N=500 optimization runs, the 10^6-sample Monte
Carlo check) are session-scoped so the unit tests and the acceptance suite
reuse the same runs.
"""

import numpy as np
import pytest

from capsphere import (
    OptimizerSettings, check_variational, influence_radii, multistart,
    preset, solve_log,
)


@pytest.fixture(scope="session")
def fig1_solution():
    return solve_log(preset("1-left"))


@pytest.fixture(scope="session")
def fig1_variational(fig1_solution):
    return check_variational(fig1_solution, preset("1-left"),
                             grid=60, samples=10**6, seed=1)


def _exclusion_caps(spec):
    if spec.s == 0.0:
        return solve_log(spec).region.caps
    return influence_radii(spec).caps


@pytest.fixture(scope="session")
def n500_runs():
    """name -> (spec, influence caps, converged 500-point configuration)."""
    runs = {}
    for name in ("1-left", "2", "3-left"):
        spec = preset(name)
        cfg = multistart(spec, 500, OptimizerSettings(restart_count=2, seed=0))
        runs[name] = (spec, _exclusion_caps(spec), cfg)
    return runs


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
