"""Model-space structure: frames, the complex structure, the connection,
curvature identities, and horizontal lifts."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srforms import make_space


def random_points(space, n, rng):
    """Random chart points, kept away from the chart boundary (kappa < 0)."""
    if space.chart_dim == 4:
        q = rng.normal(size=(n, 4))
        return q / np.linalg.norm(q, axis=1, keepdims=True)
    r = 0.75 * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    t = rng.uniform(-1.0, 1.0, size=n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), t])


def random_tangents(space, pts, rng):
    """Random unit tangent vectors (the identities under test are linear
    in each slot, so unit vectors give scale-free defects)."""
    v = rng.normal(size=pts.shape)
    if space.chart_dim == 4:
        v = v - np.einsum("ni,ni->n", v, pts)[:, None] * pts
    return v / space.norm(pts, v)[..., None]


def tangent_field(space, c):
    """A smooth global vector field with value controlled by ``c``."""
    if space.chart_dim == 3:
        def field(q):
            return np.broadcast_to(c, q.shape).copy()
    else:
        def field(q):
            dot = np.einsum("...i,i->...", q, c)
            return c - dot[..., None] * q
    return field


# ---------------------------------------------------------------------------
# frames and the complex structure


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0, 0.5, -2.2])
def test_frame_orthonormal(kappa):
    space = make_space(kappa)
    rng = np.random.default_rng(3)
    pts = random_points(space, 50, rng)
    fr = space.frame_at(pts)
    # the adapted frame (X, Y, T_Reeb) is orthonormal for the space's own
    # metric, scaled models included
    assert np.allclose(space.inner(pts, fr.X, fr.X), 1.0, atol=1e-12)
    assert np.allclose(space.inner(pts, fr.Y, fr.Y), 1.0, atol=1e-12)
    assert np.allclose(space.inner(pts, fr.X, fr.Y), 0.0, atol=1e-12)
    assert np.allclose(space.inner(pts, fr.X, fr.T), 0.0, atol=1e-12)
    assert np.allclose(space.inner(pts, fr.Y, fr.T), 0.0, atol=1e-12)
    assert np.allclose(space.inner(pts, fr.T, fr.T), 1.0, atol=1e-9)


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0, 0.5])
def test_jmap_rotation(kappa):
    space = make_space(kappa)
    rng = np.random.default_rng(4)
    pts = random_points(space, 50, rng)
    fr = space.frame_at(pts)
    assert np.allclose(space.jmap(pts, fr.X), fr.Y, atol=1e-12)
    assert np.allclose(space.jmap(pts, fr.Y), -fr.X, atol=1e-12)
    assert np.allclose(space.jmap(pts, fr.T), 0.0, atol=1e-12)
    v = random_tangents(space, pts, rng)
    hor = space.horizontal_part(pts, v)
    assert np.allclose(space.jmap(pts, space.jmap(pts, v)), -hor, atol=1e-10)
    # skew-symmetry <J(u), v> + <u, J(v)> = 0
    w = random_tangents(space, pts, rng)
    lhs = space.inner(pts, space.jmap(pts, v), w)
    rhs = space.inner(pts, v, space.jmap(pts, w))
    assert np.allclose(lhs + rhs, 0.0, atol=1e-10)


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0, 0.5])
def test_eta_detects_vertical(kappa):
    space = make_space(kappa)
    rng = np.random.default_rng(5)
    pts = random_points(space, 50, rng)
    fr = space.frame_at(pts)
    assert np.allclose(space.eta(pts, fr.T), 1.0, atol=1e-12)
    assert np.allclose(space.eta(pts, fr.X), 0.0, atol=1e-12)
    assert np.allclose(space.eta(pts, fr.Y), 0.0, atol=1e-12)


@given(x=st.floats(-0.5, 0.5), y=st.floats(-0.5, 0.5),
       t=st.floats(-1.0, 1.0), kappa=st.sampled_from([-1.0, 0.0, 1.0]))
@settings(max_examples=60, deadline=None)
def test_metric_vs_frame_gram(x, y, t, kappa):
    """The chart metric is exactly the inverse Gram construction of the
    frame: every frame inner product lands on the identity."""
    space = make_space(kappa)
    if space.chart_dim == 4:
        p = np.array([1.0, 0.0, 0.0, 0.0])
    else:
        p = np.array([x, y, t])
    fr = space.frame_at(p)
    basis = np.stack([fr.X, fr.Y, fr.T])
    g = space.metric(p)
    gram = basis @ g @ basis.T
    assert np.allclose(gram, np.eye(3), atol=1e-10)


# ---------------------------------------------------------------------------
# connection-level Sasakian identities


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_reeb_derivative_is_j(kappa):
    """D_U T = J(U) at 1000 random points per model."""
    space = make_space(kappa)
    rng = np.random.default_rng(10)
    pts = random_points(space, 1000, rng)
    u = random_tangents(space, pts, rng)
    dut = space.cov_deriv(pts, u, space.vertical_at)
    defect = dut - space.jmap(pts, u)
    assert np.max(np.abs(defect)) < 1e-9


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_j_field_derivative_identity(kappa):
    """D_U(J(V)) = J(D_U V) + <V,T> U - <U,V> T at 1000 random points."""
    space = make_space(kappa)
    rng = np.random.default_rng(11)
    pts = random_points(space, 1000, rng)
    u = random_tangents(space, pts, rng)
    c = rng.normal(size=space.chart_dim)
    v_field = tangent_field(space, c)
    v = v_field(pts)
    jv_field = lambda q: space.jmap(q, v_field(q))
    lhs = space.cov_deriv(pts, u, jv_field)
    rhs = (space.jmap(pts, space.cov_deriv(pts, u, v_field))
           + space.inner(pts, v, space.vertical_at(pts))[:, None] * u
           - space.inner(pts, u, v)[:, None] * space.vertical_at(pts))
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_curvature_reeb_identity(kappa):
    """R(U,V)T = <U,T> V - <V,T> U at 1000 random points."""
    space = make_space(kappa)
    rng = np.random.default_rng(12)
    pts = random_points(space, 1000, rng)
    u = random_tangents(space, pts, rng)
    v = random_tangents(space, pts, rng)
    t = space.vertical_at(pts)
    lhs = space.curvature_R(pts, u, v, t)
    rhs = (space.inner(pts, u, t)[:, None] * v
           - space.inner(pts, v, t)[:, None] * u)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_curvature_horizontal_identity(kappa):
    """R(U,V)U = (4K-3) <V,J(U)> J(U) + |U|^2 <V,T> T for horizontal U."""
    space = make_space(kappa)
    rng = np.random.default_rng(13)
    pts = random_points(space, 1000, rng)
    u = space.horizontal_part(pts, random_tangents(space, pts, rng))
    v = random_tangents(space, pts, rng)
    t = space.vertical_at(pts)
    ju = space.jmap(pts, u)
    lhs = space.curvature_R(pts, u, v, u)
    rhs = ((4.0 * kappa - 3.0) * space.inner(pts, v, ju)[:, None] * ju
           + (space.norm(pts, u) ** 2 * space.inner(pts, v, t))[:, None] * t)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_ricci_identity(kappa):
    """Ric(V,V) = (4K-2) |V_h|^2 + 2 <V,T>^2 at 1000 random points."""
    space = make_space(kappa)
    rng = np.random.default_rng(14)
    pts = random_points(space, 1000, rng)
    v = random_tangents(space, pts, rng)
    vh = space.horizontal_part(pts, v)
    t = space.vertical_at(pts)
    lhs = space.ricci(pts, v, v)
    rhs = ((4.0 * kappa - 2.0) * space.norm(pts, vh) ** 2
           + 2.0 * space.inner(pts, v, t) ** 2)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0, 0.5, -2.2, 3.0])
def test_webster_scalar_matches_kappa(kappa):
    space = make_space(kappa)
    rng = np.random.default_rng(15)
    pts = random_points(space.native, 20, rng)
    for p in pts:
        assert abs(space.webster_scalar(p) - kappa) < 1e-6


# ---------------------------------------------------------------------------
# horizontal lifts and holonomy


def circle_curve(radius, orientation=-1.0):
    def curve(u):
        ang = orientation * 2.0 * np.pi * u
        return np.array([radius * np.cos(ang), radius * np.sin(ang)])

    def derivative(u):
        ang = orientation * 2.0 * np.pi * u
        return orientation * 2.0 * np.pi * radius * np.array(
            [-np.sin(ang), np.cos(ang)])

    return curve, derivative


@pytest.mark.parametrize("kappa,radius", [(0.0, 1.0), (0.0, 0.35),
                                          (-1.0, 0.5), (-1.0, 0.8)])
def test_holonomy_chart_models(kappa, radius):
    """Vertical displacement of a lifted circle = 2 x quotient area."""
    space = make_space(kappa)
    curve, derivative = circle_curve(radius)
    lift = space.horizontal_lift(curve, n_steps=4096, derivative=derivative)
    expected = 2.0 * np.pi * radius**2 / (1.0 + kappa * radius**2)
    assert abs(lift.displacement - expected) < 1e-6
    # the lift stays over the curve: planar components are untouched
    assert np.allclose(lift.points[0, :2], curve(0.0), atol=1e-12)
    assert np.allclose(lift.points[-1, :2], curve(1.0), atol=1e-12)


@pytest.mark.parametrize("alpha", [np.pi / 3, np.pi / 5])
def test_holonomy_sphere_model(alpha):
    """Polar-cap circle on the quotient sphere (radius 1/2): displacement
    equals 2 x cap area = pi (1 - cos alpha)."""
    space = make_space(1.0)

    def curve(u):
        ang = -2.0 * np.pi * u
        return np.array([np.sin(alpha) * np.cos(ang),
                         np.sin(alpha) * np.sin(ang), np.cos(alpha)])

    def derivative(u):
        ang = -2.0 * np.pi * u
        return -2.0 * np.pi * np.sin(alpha) * np.array(
            [-np.sin(ang), np.cos(ang), 0.0])

    lift = space.horizontal_lift(curve, n_steps=4096, derivative=derivative)
    expected = np.pi * (1.0 - np.cos(alpha))
    assert abs(lift.displacement - expected) < 1e-6


def test_lift_without_exact_derivative():
    """The internal finite-difference derivative is good enough for the
    default step count."""
    space = make_space(0.0)
    curve, _ = circle_curve(1.0)
    lift = space.horizontal_lift(curve, n_steps=4096)
    assert abs(lift.displacement - 2.0 * np.pi) < 1e-6


def test_scaled_holonomy_consistent():
    """For a scaled model the displacement follows the epsilon^2 law
    relative to the native lift of the same planar curve."""
    kappa = -0.25
    space = make_space(kappa)
    curve, derivative = circle_curve(0.5)
    lift = space.horizontal_lift(curve, n_steps=2048, derivative=derivative)
    native = space.native.horizontal_lift(curve, n_steps=2048,
                                          derivative=derivative)
    assert np.isclose(lift.displacement,
                      native.displacement * space.epsilon**2, atol=1e-12)
