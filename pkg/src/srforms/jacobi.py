"""Jacobi fields along CC-geodesics.

The variation field obtained by perturbing a unit-speed CC-geodesic of
curvature ``lambda`` (keeping the curvature) satisfies a linear third-order
scalar equation in its vertical component ``v = <V, T>``:

    v''' + 4 (lambda**2 + kappa) v' = 0,

whose coefficient ``4 (lambda**2 + kappa)`` is :func:`tau4`.  The closed-form
solutions split by the sign of ``tau4`` into trigonometric, polynomial and
hyperbolic branches; :class:`VerticalJacobi` implements all three through the
analytic functions ``sin(sqrt(z))/sqrt(z)`` and ``(1-cos(sqrt(z)))/z`` of
``z = tau4 * s**2``, which continue smoothly across ``tau4 = 0``.

The full vector field along the geodesic is recovered from ``v`` for the
geometrically meaningful variations; for the rotation of the launch angle
around a fixed point the field is

    V = -lambda v velocity + (v'/2) J(velocity) + v T,

with ``v`` the solution with data ``v(0) = 0, v'(0) = 0, v''(0) = 2``.

Independently of the closed forms, :func:`integrate_jacobi` integrates the
second-order Jacobi system in the adapted frame ``(velocity, J(velocity),
T)`` along the geodesic.  That frame rotates with known covariant
derivatives, so the componentwise system depends only on ``(lambda, kappa)``:

    w' = u - M w,      u' = -M u - (4 kappa - 3) w_2 e_2 - w_3 e_3
                            - 2 lambda (-u_2, u_1, -w_1),

where ``M = [[0, 2 lambda, 0], [-2 lambda, 0, 1], [0, -1, 0]]`` encodes the
frame rotation, ``w`` are the components of the field and ``u`` those of its
covariant derivative.  The curvature term uses the space-form identity for
``R(velocity, V) velocity``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .geodesics import GeodesicPath, shoot_fan
from .numerics import rk4_sampled
from .space_forms import SpaceForm


def tau4(lam: float, kappa: float) -> float:
    """Coefficient ``4 (lam**2 + kappa)`` of the vertical Jacobi equation."""
    return 4.0 * (lam * lam + kappa)


def tau_root(lam: float, kappa: float) -> float:
    """``sqrt(lam**2 + kappa)``, the focusing frequency.

    Only defined (here) in the focusing regime ``lam**2 + kappa > 0``.
    """
    disc = lam * lam + kappa
    if disc <= 0.0:
        raise ValueError("tau_root requires lam**2 + kappa > 0")
    return float(np.sqrt(disc))


def _sin_ratio(z: np.ndarray) -> np.ndarray:
    """``sin(sqrt(z))/sqrt(z)`` continued through z <= 0 (sinh branch)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-8
    zp = np.where(z > 0, z, 1.0)
    zn = np.where(z < 0, -z, 1.0)
    out = np.where(
        z > 0,
        np.sin(np.sqrt(zp)) / np.sqrt(zp),
        np.sinh(np.sqrt(zn)) / np.sqrt(zn),
    )
    zs = np.where(small, z, 0.0)
    series = 1.0 - zs / 6.0 + zs * zs / 120.0
    return np.where(small, series, out)


def _versine_ratio(z: np.ndarray) -> np.ndarray:
    """``(1 - cos(sqrt(z)))/z`` continued through z <= 0 (cosh branch)."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    zp = np.where(z > 0, z, 1.0)
    zn = np.where(z < 0, -z, 1.0)
    out = np.where(
        z > 0,
        (1.0 - np.cos(np.sqrt(zp))) / zp,
        (np.cosh(np.sqrt(zn)) - 1.0) / zn,
    )
    zs = np.where(small, z, 0.0)
    series = 0.5 - zs / 24.0 + zs * zs / 720.0
    return np.where(small, series, out)


def _cos_like(z: np.ndarray) -> np.ndarray:
    """``cos(sqrt(z))`` continued through z <= 0 (cosh branch)."""
    z = np.asarray(z, dtype=float)
    zp = np.where(z > 0, z, 0.0)
    zn = np.where(z < 0, -z, 0.0)
    return np.where(z >= 0, np.cos(np.sqrt(zp)), np.cosh(np.sqrt(zn)))


@dataclass(frozen=True)
class VerticalJacobi:
    """Closed-form solution of ``v''' + tau4 v' = 0`` with given initial
    value, first and second derivative at ``s = 0``.

    The evaluation ``v(s) = v0 + dv0 * s * S(z) + ddv0 * s**2 * C(z)`` with
    ``z = tau4 * s**2`` covers the trigonometric (``tau4 > 0``), polynomial
    (``tau4 = 0``) and hyperbolic (``tau4 < 0``) branches in one formula.
    """

    lam: float
    kappa: float
    v0: float
    dv0: float
    ddv0: float

    @property
    def tau4(self) -> float:
        return tau4(self.lam, self.kappa)

    @classmethod
    def from_point(cls, lam: float, kappa: float) -> "VerticalJacobi":
        """Vertical component of the launch-angle rotation field
        (initial data ``v = 0, v' = 0, v'' = 2``)."""
        return cls(lam=lam, kappa=kappa, v0=0.0, dv0=0.0, ddv0=2.0)

    @classmethod
    def from_strip(cls, lam: float, kappa: float, h: float) -> "VerticalJacobi":
        """Vertical component of the variation of a singular strip whose
        spine enters with parameter ``h`` (initial data
        ``v = 0, v' = -2, v'' = 2 h``)."""
        return cls(lam=lam, kappa=kappa, v0=0.0, dv0=-2.0, ddv0=2.0 * h)

    def value(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        z = self.tau4 * s * s
        return self.v0 + self.dv0 * s * _sin_ratio(z) + self.ddv0 * s * s * _versine_ratio(z)

    __call__ = value

    def derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        z = self.tau4 * s * s
        return self.dv0 * _cos_like(z) + self.ddv0 * s * _sin_ratio(z)

    def second_derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        z = self.tau4 * s * s
        return -self.dv0 * self.tau4 * s * _sin_ratio(z) + self.ddv0 * _cos_like(z)

    def first_positive_zero(self, s_max: float, n_scan: int = 4096) -> float | None:
        """First zero of ``v`` in ``(0, s_max]``, or None if there is none.

        Scans a uniform grid for a sign change (or a grid hit) and refines
        with Brent's method.  The scan deliberately skips ``s = 0``.
        """
        s = np.linspace(0.0, float(s_max), n_scan + 1)
        vals = self.value(s)
        # start at the first interior node: the variations considered here
        # all share the root at s = 0, which is not "the first zero"
        for i in range(1, len(s) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0:
                return float(s[i])
            if a * b < 0.0:
                return float(brentq(lambda x: float(self.value(x)), s[i], s[i + 1],
                                    xtol=1e-14, rtol=1e-15))
        if vals[-1] == 0.0:
            return float(s[-1])
        return None


@dataclass
class JacobiField:
    """A Jacobi field sampled along a geodesic, stored both as adapted-frame
    components and as reconstructed chart vectors."""

    path: GeodesicPath
    components: np.ndarray          # (k, 3): against (velocity, J(velocity), T)
    derivative_components: np.ndarray
    vectors: np.ndarray             # (k, d) chart/ambient vectors

    def vertical_part(self) -> np.ndarray:
        """The scalar ``<V, T>`` along the path."""
        return self.components[:, 2]

    def conserved_mixed(self) -> np.ndarray:
        """``lam * <V,T> + <V, velocity>`` — constant along any variation
        through curvature-``lam`` geodesics from a fixed point."""
        return self.path.lam * self.components[:, 2] + self.components[:, 0]


def _frame_rotation(lam: float) -> np.ndarray:
    return np.array([
        [0.0, 2.0 * lam, 0.0],
        [-2.0 * lam, 0.0, 1.0],
        [0.0, -1.0, 0.0],
    ])


def integrate_jacobi(
    lam: float,
    kappa: float,
    s_values: np.ndarray,
    w0: np.ndarray,
    u0: np.ndarray,
    step: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4-integrate the Jacobi system in the adapted frame.

    ``w0`` holds the components of the initial field and ``u0`` those of its
    initial covariant derivative, both against ``(velocity, J(velocity), T)``.
    Returns arrays ``(w, u)`` of shape (len(s_values), 3).
    """
    M = _frame_rotation(lam)
    c = 4.0 * kappa - 3.0

    def rhs(state: np.ndarray) -> np.ndarray:
        w, u = state[:3], state[3:]
        dw = u - M @ w
        du = -(M @ u)
        du[1] -= c * w[1]
        du[2] -= w[2]
        du -= 2.0 * lam * np.array([-u[1], u[0], -w[0]])
        return np.concatenate([dw, du])

    states = rk4_sampled(rhs, np.concatenate([w0, u0]), np.asarray(s_values, dtype=float), step)
    return states[:, :3], states[:, 3:]


def assemble_field(path: GeodesicPath, components: np.ndarray,
                   derivative_components: np.ndarray | None = None) -> JacobiField:
    """Turn adapted-frame components into chart vectors along ``path``."""
    tangent, j_tangent, vertical = path.adapted_frame()
    comp = np.asarray(components, dtype=float)
    vectors = (comp[:, 0, None] * tangent + comp[:, 1, None] * j_tangent
               + comp[:, 2, None] * vertical)
    if derivative_components is None:
        derivative_components = np.full_like(comp, np.nan)
    return JacobiField(path=path, components=comp,
                       derivative_components=np.asarray(derivative_components, dtype=float),
                       vectors=vectors)


def rotation_field_closed_form(path: GeodesicPath) -> JacobiField:
    """The launch-angle rotation Jacobi field along ``path``, from the
    closed-form vertical solution.

    The field vanishes at ``s = 0``, has covariant derivative
    ``J(velocity)`` there, and equals
    ``-lam v velocity + (v'/2) J(velocity) + v T`` with ``v`` the
    from-point vertical solution.
    """
    lam, kappa = path.lam, path.space.kappa
    v = VerticalJacobi.from_point(lam, kappa)
    vv = v.value(path.s)
    dvv = v.derivative(path.s)
    ddvv = v.second_derivative(path.s)
    comp = np.column_stack([-lam * vv, 0.5 * dvv, vv])
    # covariant derivative components: d/ds of the components plus the
    # adapted-frame rotation term
    raw = np.column_stack([-lam * dvv, 0.5 * ddvv, dvv])
    dcomp = raw + comp @ _frame_rotation(lam).T
    return assemble_field(path, comp, dcomp)


def rotation_field_ode(path: GeodesicPath, step: float = 1e-3) -> JacobiField:
    """The launch-angle rotation Jacobi field along ``path``, by RK4
    integration of the adapted-frame Jacobi system (initial field zero,
    initial covariant derivative ``J(velocity)``)."""
    w0 = np.zeros(3)
    u0 = np.array([0.0, 1.0, 0.0])
    w, u = integrate_jacobi(path.lam, path.space.kappa, path.s, w0, u0, step=step)
    return assemble_field(path, w, u)


def flow_variation_fd(
    space: SpaceForm,
    p: np.ndarray,
    lam: float,
    theta: float,
    s_values: np.ndarray,
    h: float = 1e-4,
    step: float = 1e-3,
) -> np.ndarray:
    """Finite-difference launch-angle variation of the geodesic flow.

    Central difference ``(F(theta+h, s) - F(theta-h, s)) / (2 h)`` of the
    geodesic flow from ``p``; for the sphere model the quotient is projected
    onto the tangent space of the center ray's points.  This is the
    independent oracle for the Jacobi field machinery.
    """
    s_values = np.asarray(s_values, dtype=float)
    thetas = np.array([theta - h, theta, theta + h])
    points, _ = shoot_fan(space, p, lam, thetas, s_values, step=step)
    diff = (points[2] - points[0]) / (2.0 * h)
    if space.chart_dim == 4:
        base = points[1]
        diff = diff - np.einsum("ki,ki->k", diff, base)[:, None] * base
    return diff
