"""CC-geodesic shooting: closed forms, unit speed, residuals, focusing."""

from __future__ import annotations

import numpy as np
import pytest

from srforms import cut_length, make_space, shoot
from srforms.geodesics import residual, shoot_fan, verify_focusing

from conftest import base_point_of

FOCUSING_PAIRS = [(1.0, 0.0), (0.0, 1.0), (2.0, -1.0), (0.5, 0.5)]


def heisenberg_closed_form(lam, s):
    """The curvature-``lam`` geodesic from the origin with launch angle 0 in
    the flat model: an orbit of the one-parameter group generated by a
    right-invariant field, spiraling with vertical drift."""
    x = np.sin(2.0 * lam * s) / (2.0 * lam)
    y = (np.cos(2.0 * lam * s) - 1.0) / (2.0 * lam)
    t = s / (2.0 * lam) - np.sin(2.0 * lam * s) / (4.0 * lam**2)
    return np.column_stack([x, y, t])


def test_cut_length_values():
    assert np.isclose(cut_length(1.0, 0.0), np.pi)
    assert np.isclose(cut_length(2.0, -1.0), np.pi / np.sqrt(3.0))
    assert np.isclose(cut_length(0.0, 1.0), np.pi)
    assert np.isclose(cut_length(0.5, 0.5), np.pi / np.sqrt(0.75))
    assert cut_length(0.0, 0.0) == np.inf
    assert cut_length(1.0, -1.0) == np.inf
    assert cut_length(0.5, -1.0) == np.inf


def test_heisenberg_closed_form():
    lam = 1.0
    space = make_space(0.0)
    path = shoot(space, np.zeros(3), lam, theta=0.0, length=np.pi,
                 n_samples=128)
    expected = heisenberg_closed_form(lam, path.s)
    assert np.max(np.abs(path.points - expected)) < 1e-9


def test_straight_line_when_lam_zero():
    space = make_space(0.0)
    path = shoot(space, np.zeros(3), 0.0, theta=0.3, length=2.0,
                 n_samples=64)
    direction = np.array([np.cos(0.3), np.sin(0.3), 0.0])
    expected = path.s[:, None] * direction
    assert np.max(np.abs(path.points - expected)) < 1e-10


@pytest.mark.parametrize("lam,kappa", FOCUSING_PAIRS)
def test_unit_speed(lam, kappa):
    space = make_space(kappa)
    path = shoot(space, base_point_of(space), lam, theta=1.1,
                 length=0.9 * cut_length(lam, kappa), n_samples=64)
    speeds = space.norm(path.points, path.velocities)
    assert np.max(np.abs(speeds - 1.0)) < 1e-9


@pytest.mark.parametrize("lam,kappa", FOCUSING_PAIRS + [(0.7, -0.49)])
def test_residual_small(lam, kappa):
    """The geodesic-equation defect is below 1e-9 when the path is sampled
    at the trace resolution (the defect floor is the fourth-order
    differentiation error of the sample grid, so it needs ds ~ 1e-3)."""
    space = make_space(kappa)
    length = min(cut_length(lam, kappa), 3.0)
    path = shoot(space, base_point_of(space), lam, theta=0.4, length=length,
                 n_samples=4096)
    res = residual(path)
    assert np.max(res) < 1e-9


@pytest.mark.parametrize("lam,kappa", FOCUSING_PAIRS)
def test_focusing(lam, kappa):
    """16 rays from a common point meet again at s = pi/sqrt(lam^2+kappa)."""
    space = make_space(kappa)
    report = verify_focusing(space, base_point_of(space), lam, n_rays=16)
    assert np.isclose(report.cut_length, np.pi / np.sqrt(lam**2 + kappa))
    assert report.spread < 1e-6


def test_shoot_v0_matches_theta():
    space = make_space(0.0)
    base = np.array([0.2, -0.1, 0.3])
    fr = space.frame_at(base)
    v0 = np.cos(0.7) * fr.X + np.sin(0.7) * fr.Y
    a = shoot(space, base, 1.2, theta=0.7, length=1.0, n_samples=32)
    b = shoot(space, base, 1.2, v0=v0, length=1.0, n_samples=32)
    assert np.max(np.abs(a.points - b.points)) < 1e-12
    assert np.max(np.abs(a.velocities - b.velocities)) < 1e-12


def test_shoot_needs_exactly_one_direction():
    space = make_space(0.0)
    with pytest.raises(ValueError):
        shoot(space, np.zeros(3), 1.0, length=1.0)
    with pytest.raises(ValueError):
        shoot(space, np.zeros(3), 1.0, theta=0.0, v0=np.array([1.0, 0, 0]),
              length=1.0)


def test_fan_matches_individual_shots():
    space = make_space(-1.0)
    thetas = np.array([0.0, 1.0, 2.5])
    s_values = np.linspace(0.0, 1.2, 25)
    pts, vel = shoot_fan(space, np.zeros(3), 2.0, thetas, s_values)
    for i, th in enumerate(thetas):
        single = shoot(space, np.zeros(3), 2.0, theta=float(th), length=1.2,
                       n_samples=24)
        assert np.max(np.abs(single.points - pts[i])) < 1e-12
        assert np.max(np.abs(single.velocities - vel[i])) < 1e-12


def test_scaled_model_focuses_at_closed_form_length():
    """The homothety bookkeeping is invisible from outside: a scaled model
    still focuses at pi/sqrt(lam^2+kappa) of its own arc length."""
    lam, kappa = 1.0, -0.36
    space = make_space(kappa)
    report = verify_focusing(space, np.zeros(3), lam, n_rays=8)
    assert np.isclose(report.cut_length, np.pi / np.sqrt(lam**2 + kappa))
    assert report.spread < 1e-6


def test_quaternion_paths_stay_unit():
    space = make_space(1.0)
    path = shoot(space, base_point_of(space), 0.3, theta=2.0,
                 length=cut_length(0.3, 1.0), n_samples=100)
    norms = np.linalg.norm(path.points, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-12
