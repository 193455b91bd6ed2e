"""Carnot-Caratheodory geodesics of the space forms.

A complete unit-speed CC-geodesic of curvature ``lambda`` satisfies the
second-order equation ``acc + 2 lambda J(vel) = 0`` (covariant acceleration
balanced by the rotated velocity).  The integrator always runs in the native
sign model; a space with scaled curvature is handled through the exact
homothety correspondence: the curve of curvature ``lambda`` in the scaled
space is the native curve of curvature ``lambda * epsilon`` traversed with
arc length divided by ``epsilon``.

Integration is fixed-step RK4 (default step 1e-3 in arc length) on the
chart/ambient second-order system, with an exact constraint projection after
every step: the velocity is re-horizontalized and renormalized to unit speed
(and the sphere model is renormalized to the unit sphere).  Geodesics are
vectorized over families of initial directions, which is what the sphere
builder consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import deriv1_uniform, rk4_sampled
from .space_forms import SpaceForm

DEFAULT_STEP = 1e-3


def cut_length(lam: float, kappa: float) -> float:
    """Arc length after which geodesics of curvature ``lam`` refocus.

    Finite exactly when ``lam**2 + kappa > 0``, in which case all unit-speed
    geodesics of curvature ``lam`` from a point meet again after
    ``pi / sqrt(lam**2 + kappa)``; otherwise geodesics never refocus and the
    value is ``inf``.
    """
    disc = lam * lam + kappa
    if disc > 0.0:
        return float(np.pi / np.sqrt(disc))
    return float("inf")


@dataclass
class GeodesicPath:
    """A sampled CC-geodesic.

    ``s`` holds the (uniform, increasing) arc-length samples in the space's
    own metric, ``points`` and ``velocities`` the chart positions and chart
    velocity components at those samples.  ``theta`` records the launch
    angle against the adapted frame when the path was built from one.
    """

    space: SpaceForm
    lam: float
    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    theta: float | None = None

    def adapted_frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The frame ``(velocity, J(velocity), T)`` along the path."""
        tangent = self.velocities
        j_tangent = self.space.jmap(self.points, self.velocities)
        vertical = self.space.vertical_at(self.points)
        return tangent, j_tangent, vertical


@dataclass(frozen=True)
class FocusingReport:
    """Endpoint statistics of a fan of geodesics shot to the cut length."""

    cut_length: float
    endpoints: np.ndarray
    spread: float
    mean_endpoint: np.ndarray


def _native_rhs(space: SpaceForm, lam_nat: float):
    nat = space.native
    if nat.native_kappa <= 0:
        def rhs(state: np.ndarray) -> np.ndarray:
            pos, vel = state[..., :3], state[..., 3:]
            gamma = nat.christoffel(pos)
            acc = -np.einsum("...kij,...i,...j->...k", gamma, vel, vel)
            acc -= 2.0 * lam_nat * nat.jmap(pos, vel)
            return np.concatenate([vel, acc], axis=-1)
        return rhs

    def rhs(state: np.ndarray) -> np.ndarray:
        q, v = state[..., :4], state[..., 4:]
        speed2 = np.einsum("...i,...i->...", v, v)[..., None]
        acc = -speed2 * q - 2.0 * lam_nat * nat.jmap(q, v)
        return np.concatenate([v, acc], axis=-1)
    return rhs


def _native_project(space: SpaceForm):
    nat = space.native
    k = nat.native_kappa
    if k <= 0:
        def project(state: np.ndarray) -> np.ndarray:
            pos, vel = state[..., :3], state[..., 3:]
            x, y = pos[..., 0], pos[..., 1]
            denom = 1.0 + k * (x * x + y * y)
            if k < 0 and np.any(denom < 1e-6):
                raise RuntimeError("geodesic left the chart disk of the "
                                   "negative-curvature model")
            rho = 1.0 / denom
            vx, vy = vel[..., 0], vel[..., 1]
            vt = rho * (y * vx - x * vy)
            speed = rho * np.hypot(vx, vy)
            new_vel = np.stack([vx, vy, vt], axis=-1) / speed[..., None]
            return np.concatenate([pos, new_vel], axis=-1)
        return project

    def project(state: np.ndarray) -> np.ndarray:
        q, v = state[..., :4], state[..., 4:]
        q = q / np.linalg.norm(q, axis=-1, keepdims=True)
        v = v - np.einsum("...i,...i->...", v, q)[..., None] * q
        t = nat.vertical_at(q)
        v = v - np.einsum("...i,...i->...", v, t)[..., None] * t
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return np.concatenate([q, v], axis=-1)
    return project


def _shoot_batch(
    space: SpaceForm,
    p: np.ndarray,
    lam: float,
    v0_native: np.ndarray,
    s_values: np.ndarray,
    step: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a batch of native geodesics, sampling at the space's
    arc-length values ``s_values``.

    ``v0_native`` has shape (m, d) of unit native horizontal velocities.
    Returns points and velocities in the *space's* parameterization, shapes
    (m, k, d).
    """
    eps = space.epsilon
    lam_nat = lam * eps
    u_values = np.asarray(s_values, dtype=float) / eps
    d = space.chart_dim
    m = v0_native.shape[0]
    state0 = np.concatenate([np.broadcast_to(p, (m, d)), v0_native], axis=-1)
    rhs = _native_rhs(space, lam_nat)
    project = _native_project(space)
    states = rk4_sampled(rhs, state0, u_values, max_step=step / eps, project=project)
    points = np.moveaxis(states[..., :d], 0, 1)
    velocities = np.moveaxis(states[..., d:], 0, 1) / eps
    return points, velocities


def shoot(
    space: SpaceForm,
    p: np.ndarray,
    lam: float,
    theta: float | None = None,
    v0: np.ndarray | None = None,
    length: float = 1.0,
    n_samples: int = 256,
    step: float = DEFAULT_STEP,
) -> GeodesicPath:
    """Shoot the unit-speed CC-geodesic of curvature ``lam`` from ``p``.

    The initial direction is ``cos(theta) X + sin(theta) Y`` against the
    adapted frame at ``p``, or an explicit chart vector ``v0`` (which is
    projected to the horizontal space and normalized).  The path is sampled
    at ``n_samples + 1`` uniform arc-length values on ``[0, length]``.
    """
    p = np.asarray(p, dtype=float)
    if (theta is None) == (v0 is None):
        raise ValueError("provide exactly one of theta and v0")
    nat = space.native
    if theta is not None:
        frame = nat.frame_at(p)
        v_native = np.cos(theta) * frame.X + np.sin(theta) * frame.Y
    else:
        v_native = space.epsilon * np.asarray(v0, dtype=float)
        hor = nat.horizontal_part(p, v_native)
        v_native = hor / nat.norm(p, hor)
    s_values = np.linspace(0.0, length, n_samples + 1)
    points, velocities = _shoot_batch(space, p, lam, v_native[None, :], s_values, step)
    return GeodesicPath(
        space=space,
        lam=lam,
        s=s_values,
        points=points[0],
        velocities=velocities[0],
        theta=theta if theta is not None else None,
    )


def shoot_fan(
    space: SpaceForm,
    p: np.ndarray,
    lam: float,
    thetas: np.ndarray,
    s_values: np.ndarray,
    step: float = DEFAULT_STEP,
) -> tuple[np.ndarray, np.ndarray]:
    """Shoot one geodesic per launch angle, sampled at shared arc lengths.

    Returns ``(points, velocities)`` with shape (len(thetas), len(s_values),
    chart_dim).  This is the workhorse of the sphere builder.
    """
    p = np.asarray(p, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    frame = space.native.frame_at(p)
    v0 = np.cos(thetas)[:, None] * frame.X + np.sin(thetas)[:, None] * frame.Y
    return _shoot_batch(space, p, lam, v0, np.asarray(s_values, dtype=float), step)


def residual(path: GeodesicPath) -> np.ndarray:
    """Pointwise defect of the geodesic equation along a sampled path.

    The path is converted to its native parameterization (where the
    Christoffel symbols are available) and the covariant acceleration is
    reconstructed with fourth-order finite differences of the sampled
    velocities; the result is the native metric norm of
    ``acc + 2 lambda_native J(vel)`` at each sample.  Expected magnitude for
    a healthy path: dominated by the differentiation error of the sampling
    grid, not by the integration error.
    """
    space = path.space
    nat = space.native
    eps = space.epsilon
    u = path.s / eps
    du = u[1] - u[0]
    if not np.allclose(np.diff(u), du):
        raise ValueError("residual needs a uniformly sampled path")
    vel_nat = eps * path.velocities
    pos = path.points
    acc = deriv1_uniform(vel_nat, du, axis=0)
    lam_nat = path.lam * eps
    if nat.native_kappa <= 0:
        gamma = nat.christoffel(pos)
        defect = acc + np.einsum("...kij,...i,...j->...k", gamma, vel_nat, vel_nat)
        defect += 2.0 * lam_nat * nat.jmap(pos, vel_nat)
    else:
        speed2 = np.einsum("...i,...i->...", vel_nat, vel_nat)[..., None]
        defect = acc + speed2 * pos + 2.0 * lam_nat * nat.jmap(pos, vel_nat)
    return np.sqrt(np.maximum(nat.inner(pos, defect, defect), 0.0))


def verify_focusing(
    space: SpaceForm,
    p: np.ndarray,
    lam: float,
    n_rays: int = 16,
    step: float = DEFAULT_STEP,
) -> FocusingReport:
    """Shoot a fan of geodesics to the cut length and measure the endpoint
    spread (maximum pairwise chart distance).

    Requires ``lam**2 + kappa > 0``; at the cut length all rays hit the same
    conjugate point, so the spread certifies both the focusing statement and
    the integrator accuracy.
    """
    L = cut_length(lam, space.kappa)
    if not np.isfinite(L):
        raise ValueError("geodesics of this curvature never refocus "
                         "(lam**2 + kappa <= 0)")
    thetas = np.linspace(0.0, 2.0 * np.pi, n_rays, endpoint=False)
    points, _ = shoot_fan(space, p, lam, thetas, np.array([0.0, L]), step=step)
    endpoints = points[:, -1, :]
    diffs = endpoints[:, None, :] - endpoints[None, :, :]
    spread = float(np.sqrt((diffs**2).sum(axis=-1)).max())
    return FocusingReport(
        cut_length=L,
        endpoints=endpoints,
        spread=spread,
        mean_endpoint=endpoints.mean(axis=0),
    )
