"""Shared fixtures: model spaces and cached candidate spheres.

Sphere builds integrate a geodesic fan and are the most expensive setup in
the suite, so they are cached per (lam, kappa, n_theta, n_s) for the whole
session.
"""

from __future__ import annotations

import numpy as np
import pytest

from srforms import build_sphere, make_space


def base_point_of(space) -> np.ndarray:
    if space.chart_dim == 3:
        return np.zeros(3)
    return np.array([1.0, 0.0, 0.0, 0.0])


_CACHE: dict = {}


@pytest.fixture(scope="session")
def sphere_cache():
    """Callable fixture: sphere_cache(lam, kappa, n_theta=48, n_s=96)."""

    def get(lam: float, kappa: float, n_theta: int = 48, n_s: int = 96):
        key = (float(lam), float(kappa), int(n_theta), int(n_s))
        if key not in _CACHE:
            space = make_space(kappa)
            _CACHE[key] = build_sphere(space, base_point_of(space), lam,
                                       n_theta=n_theta, n_s=n_s)
        return _CACHE[key]

    return get


# the parameter pairs used across stability/sphere tests: the three native
# curvatures with focusing spheres
NATIVE_PAIRS = [(1.0, 0.0), (1.0, 1.0), (2.0, -1.0)]


# ---------------------------------------------------------------------------
# acceptance scorecard: collected lines are replayed in the terminal summary
# (pytest's fd-level capture would otherwise swallow per-test prints)

_SCORECARD: list = []


def record_scorecard(line: str) -> None:
    _SCORECARD.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _SCORECARD:
        terminalreporter.write_sep("-", "acceptance scorecard")
        for line in _SCORECARD:
            terminalreporter.write_line(line)
