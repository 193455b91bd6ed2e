"""The three-dimensional Sasakian sub-Riemannian space forms.

A space form here is a contact 3-manifold with a metric making the Reeb
vector field ``T`` a unit Killing field whose integral curves are geodesics,
together with the 90-degree rotation ``J`` on the horizontal (contact)
distribution.  The family is parameterized by the Webster scalar curvature
``kappa``:

* ``kappa = 0``  — the Heisenberg group on the chart ``(x, y, t)`` with
  horizontal frame ``X = dx + y dt``, ``Y = dy - x dt`` and ``T = dt``.
* ``kappa < 0``  — the same chart restricted to the disk
  ``x^2 + y^2 < -1/kappa``, with the conformal factor
  ``rho = 1/(1 + kappa (x^2+y^2))`` weighting the horizontal metric; the
  base is then the hyperbolic disk of curvature ``4*kappa``.
* ``kappa > 0``  — the unit sphere in R^4 (unit quaternions), with
  ``T(p) = i p`` tangent to the Hopf fibers and the horizontal frame
  ``X(p) = j p``, ``Y(p) = k p``.

Curvatures other than -1, 0, 1 are realized by a homothety of the matching
native model: scaling the metric by ``epsilon`` on the horizontal bundle and
``epsilon^2`` vertically multiplies the Webster curvature by ``1/epsilon^2``,
so every ``kappa`` is covered by ``epsilon = 1/sqrt(|kappa|)`` over the model
of the same sign.  Scaled spaces share the native charts; quantities with a
simple scaling law (frames, metric, lifts, Webster curvature) are exposed
directly, while Christoffel-level operations are native-model-only.

Conventions fixed throughout the package: ``[X, Y] = -2T`` modulo horizontal
terms, ``J(X) = Y``, and the curvature operator ``curvature_R`` uses the sign
``R(U,V)W = D_V D_U W - D_U D_V W + D_{[U,V]} W`` (the negative of the more
common textbook tensor), under which ``R(U,V)T = <U,T> V - <V,T> U``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .numerics import rk4_sampled

# A chart point is a plain float array: shape (3,) for the kappa <= 0 charts
# (coordinates x, y, t) and shape (4,) for the sphere model (a unit
# quaternion).  Vectorized methods accept leading batch dimensions.
ChartPoint = np.ndarray

_FD_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_FD_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])


@dataclass(frozen=True)
class Frame:
    """Orthonormal adapted frame at a point: horizontal ``X``, ``Y`` and
    the Reeb field ``T``, with ``J(X) = Y``."""

    X: np.ndarray
    Y: np.ndarray
    T: np.ndarray


@dataclass(frozen=True)
class LiftedPath:
    """A horizontal lift of a closed curve in the quotient surface.

    ``points`` samples the lift in the chart; ``displacement`` is the net
    motion along the Reeb direction (measured in Reeb time, i.e. against the
    unit vertical field of the space) after traversing the curve once.
    """

    points: np.ndarray
    displacement: float


def _quat_i(q: np.ndarray) -> np.ndarray:
    """Left multiplication by the quaternion i."""
    return np.stack([-q[..., 1], q[..., 0], -q[..., 3], q[..., 2]], axis=-1)


def _quat_j(q: np.ndarray) -> np.ndarray:
    """Left multiplication by the quaternion j."""
    return np.stack([-q[..., 2], q[..., 3], q[..., 0], -q[..., 1]], axis=-1)


def _quat_k(q: np.ndarray) -> np.ndarray:
    """Left multiplication by the quaternion k."""
    return np.stack([-q[..., 3], -q[..., 2], q[..., 1], q[..., 0]], axis=-1)


def hopf_project(q: np.ndarray) -> np.ndarray:
    """The quotient map of the sphere model onto the unit 2-sphere.

    Collapses each circle fiber ``e^{i s} q``; the quotient metric makes the
    target a sphere of Gauss curvature 4 (radius 1/2 written on the unit
    round sphere).
    """
    q = np.asarray(q, dtype=float)
    x1, y1, x2, y2 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2,
            2.0 * (x2 * y1 - x1 * y2),
            2.0 * (x1 * x2 + y1 * y2),
        ],
        axis=-1,
    )


def _hopf_differential(q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Differential of :func:`hopf_project` at ``q`` applied to ``w``."""
    x1, y1, x2, y2 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    w0, w1, w2, w3 = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    return np.stack(
        [
            2.0 * (x1 * w0 + y1 * w1 - x2 * w2 - y2 * w3),
            2.0 * (w2 * y1 + x2 * w1 - w0 * y2 - x1 * w3),
            2.0 * (w0 * x2 + x1 * w2 + w1 * y2 + y1 * w3),
        ],
        axis=-1,
    )


def _hopf_fiber_point(c: np.ndarray) -> np.ndarray:
    """Some unit quaternion in the fiber over the unit vector ``c``."""
    c = np.asarray(c, dtype=float)
    phi = np.arccos(np.clip(c[0], -1.0, 1.0))
    psi = np.arctan2(c[2], c[1]) - 0.5 * np.pi
    return np.array(
        [np.cos(0.5 * phi), 0.0, np.sin(0.5 * phi) * np.cos(psi), np.sin(0.5 * phi) * np.sin(psi)]
    )


@dataclass(frozen=True)
class SpaceForm:
    """A Sasakian space form of Webster scalar curvature ``kappa``.

    Instances are built with :func:`make_space`.  ``native_kappa`` is the
    sign model (-1, 0 or 1) actually realized by a chart; ``epsilon`` is the
    homothety factor relating the requested curvature to the native one,
    ``kappa = native_kappa / epsilon**2`` (and ``epsilon = 1`` exactly for
    the native models).
    """

    kappa: float
    native_kappa: int
    epsilon: float

    # ------------------------------------------------------------------
    # basic structure
    # ------------------------------------------------------------------

    @property
    def is_native(self) -> bool:
        return self.epsilon == 1.0

    @property
    def chart_dim(self) -> int:
        """Dimension of the chart arrays: 3 for the (x,y,t) charts, 4 for
        the sphere model embedded in R^4."""
        return 3 if self.native_kappa <= 0 else 4

    @cached_property
    def native(self) -> "SpaceForm":
        """The unscaled model of the same curvature sign."""
        if self.is_native:
            return self
        return SpaceForm(kappa=float(self.native_kappa), native_kappa=self.native_kappa, epsilon=1.0)

    def origin(self) -> ChartPoint:
        """A convenient base point: the chart origin, or the quaternion 1."""
        if self.chart_dim == 3:
            return np.zeros(3)
        return np.array([1.0, 0.0, 0.0, 0.0])

    def chart_radius(self) -> float:
        """Radius of the planar chart disk (inf for kappa >= 0 models)."""
        if self.native_kappa < 0:
            return 1.0
        return np.inf

    def _rho(self, p: np.ndarray) -> np.ndarray:
        x, y = p[..., 0], p[..., 1]
        return 1.0 / (1.0 + self.native_kappa * (x * x + y * y))

    # ------------------------------------------------------------------
    # metric, contact form, frame, rotation
    # ------------------------------------------------------------------

    def metric(self, p: ChartPoint) -> np.ndarray:
        """Metric tensor at ``p`` as a matrix acting on chart components.

        For the sphere model the matrix acts on ambient R^4 components of
        tangent vectors (it is only meaningful on the tangent space).
        """
        p = np.asarray(p, dtype=float)
        if self.native_kappa <= 0:
            x, y = p[..., 0], p[..., 1]
            rho = self._rho(p)
            a = rho * rho
            g = np.zeros(p.shape[:-1] + (3, 3))
            g[..., 0, 0] = a * (1.0 + y * y)
            g[..., 0, 1] = g[..., 1, 0] = -a * x * y
            g[..., 0, 2] = g[..., 2, 0] = -rho * y
            g[..., 1, 1] = a * (1.0 + x * x)
            g[..., 1, 2] = g[..., 2, 1] = rho * x
            g[..., 2, 2] = np.ones_like(rho)
        else:
            g = np.broadcast_to(np.eye(4), p.shape[:-1] + (4, 4)).copy()
        if self.epsilon != 1.0:
            e2 = self.epsilon**2
            eta = self._eta_covector(p)
            g = e2 * g + e2 * (e2 - 1.0) * eta[..., :, None] * eta[..., None, :]
        return g

    def _eta_covector(self, p: np.ndarray) -> np.ndarray:
        """Components of the native contact form at ``p``."""
        if self.native_kappa <= 0:
            x, y = p[..., 0], p[..., 1]
            rho = self._rho(p)
            return np.stack([-rho * y, rho * x, np.ones_like(rho)], axis=-1)
        return _quat_i(p)

    def inner(self, p: ChartPoint, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Metric inner product of tangent vectors at ``p``."""
        g = self.metric(p)
        return np.einsum("...ij,...i,...j->...", g, u, v)

    def norm(self, p: ChartPoint, u: np.ndarray) -> np.ndarray:
        return np.sqrt(self.inner(p, u, u))

    def eta(self, p: ChartPoint, u: np.ndarray) -> np.ndarray:
        """Contact form (the metric dual of the unit vertical field)."""
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        val = np.einsum("...i,...i->...", self._eta_covector(p), u)
        return self.epsilon**2 * val

    def vertical_at(self, p: ChartPoint) -> np.ndarray:
        """The unit Reeb field ``T`` at ``p``."""
        p = np.asarray(p, dtype=float)
        if self.native_kappa <= 0:
            t = np.zeros(p.shape[:-1] + (3,))
            t[..., 2] = 1.0
        else:
            t = _quat_i(p)
        return t / self.epsilon**2

    def frame_at(self, p: ChartPoint) -> Frame:
        """Orthonormal adapted frame ``(X, Y, T)`` at ``p`` with ``J(X)=Y``."""
        p = np.asarray(p, dtype=float)
        if self.native_kappa <= 0:
            x, y = p[..., 0], p[..., 1]
            inv_rho = 1.0 + self.native_kappa * (x * x + y * y)
            zero = np.zeros_like(x)
            X = np.stack([inv_rho, zero, y], axis=-1)
            Y = np.stack([zero, inv_rho, -x], axis=-1)
        else:
            X = _quat_j(p)
            Y = _quat_k(p)
        return Frame(X=X / self.epsilon, Y=Y / self.epsilon, T=self.vertical_at(p))

    def jmap(self, p: ChartPoint, u: np.ndarray) -> np.ndarray:
        """The contact rotation ``J``: +90-degree rotation of the horizontal
        part of ``u`` (so ``J(X) = Y``, ``J(Y) = -X``, ``J(T) = 0``)."""
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.native_kappa <= 0:
            x, y = p[..., 0], p[..., 1]
            rho = self._rho(p)
            ux, uy = u[..., 0], u[..., 1]
            return np.stack([-uy, ux, -rho * (x * ux + y * uy)], axis=-1)
        iu = _quat_i(u)
        corr = np.einsum("...i,...i->...", u, _quat_i(p))
        return iu + corr[..., None] * p

    def horizontal_part(self, p: ChartPoint, u: np.ndarray) -> np.ndarray:
        """Project ``u`` onto the horizontal distribution at ``p``."""
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        return u - self.eta(p, u)[..., None] * self.vertical_at(p)

    # ------------------------------------------------------------------
    # Christoffel data for the (x, y, t) charts (native models only)
    # ------------------------------------------------------------------

    def _require_native(self, what: str) -> None:
        if not self.is_native:
            raise NotImplementedError(
                f"{what} is exposed for the native models (kappa in {{-1, 0, 1}}) only; "
                "scaled spaces delegate through their exact scaling laws"
            )

    def _metric_blocks(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Analytic ``g``, ``dg`` and ``d2g`` for the chart models.

        ``dg[..., m, a, b]`` is the partial of ``g_ab`` in the ``m``-th chart
        direction and ``d2g[..., m, n, a, b]`` the second partial; the ``t``
        direction is included (identically zero) to keep index arithmetic
        uniform.
        """
        x, y = p[..., 0], p[..., 1]
        k = float(self.native_kappa)
        rho = self._rho(p)
        rho2, rho3 = rho * rho, rho * rho * rho
        rho_x = -2.0 * k * x * rho2
        rho_y = -2.0 * k * y * rho2
        rho_xx = -2.0 * k * rho2 + 8.0 * k * k * x * x * rho3
        rho_xy = 8.0 * k * k * x * y * rho3
        rho_yy = -2.0 * k * rho2 + 8.0 * k * k * y * y * rho3

        A = rho2
        A_x, A_y = 2.0 * rho * rho_x, 2.0 * rho * rho_y
        A_xx = 2.0 * (rho_x * rho_x + rho * rho_xx)
        A_xy = 2.0 * (rho_x * rho_y + rho * rho_xy)
        A_yy = 2.0 * (rho_y * rho_y + rho * rho_yy)

        base = p.shape[:-1]
        g = np.zeros(base + (3, 3))
        dg = np.zeros(base + (3, 3, 3))
        d2g = np.zeros(base + (3, 3, 3, 3))

        one = np.ones_like(x)
        oy2, ox2 = 1.0 + y * y, 1.0 + x * x

        def sym_set(target, idx, a, b, val):
            target[idx + (a, b)] = val
            if a != b:
                target[idx + (b, a)] = val

        E = (Ellipsis,)
        sym_set(g, E, 0, 0, A * oy2)
        sym_set(g, E, 0, 1, -A * x * y)
        sym_set(g, E, 0, 2, -rho * y)
        sym_set(g, E, 1, 1, A * ox2)
        sym_set(g, E, 1, 2, rho * x)
        sym_set(g, E, 2, 2, one)

        sym_set(dg, E + (0,), 0, 0, A_x * oy2)
        sym_set(dg, E + (0,), 0, 1, -A_x * x * y - A * y)
        sym_set(dg, E + (0,), 0, 2, -rho_x * y)
        sym_set(dg, E + (0,), 1, 1, A_x * ox2 + 2.0 * A * x)
        sym_set(dg, E + (0,), 1, 2, rho_x * x + rho)

        sym_set(dg, E + (1,), 0, 0, A_y * oy2 + 2.0 * A * y)
        sym_set(dg, E + (1,), 0, 1, -A_y * x * y - A * x)
        sym_set(dg, E + (1,), 0, 2, -rho_y * y - rho)
        sym_set(dg, E + (1,), 1, 1, A_y * ox2)
        sym_set(dg, E + (1,), 1, 2, rho_y * x)

        sym_set(d2g, E + (0, 0), 0, 0, A_xx * oy2)
        sym_set(d2g, E + (0, 0), 0, 1, -A_xx * x * y - 2.0 * A_x * y)
        sym_set(d2g, E + (0, 0), 0, 2, -rho_xx * y)
        sym_set(d2g, E + (0, 0), 1, 1, A_xx * ox2 + 4.0 * A_x * x + 2.0 * A)
        sym_set(d2g, E + (0, 0), 1, 2, rho_xx * x + 2.0 * rho_x)

        for mixed in ((0, 1), (1, 0)):
            sym_set(d2g, E + mixed, 0, 0, A_xy * oy2 + 2.0 * A_x * y)
            sym_set(d2g, E + mixed, 0, 1, -A_xy * x * y - A_x * x - A_y * y - A)
            sym_set(d2g, E + mixed, 0, 2, -rho_xy * y - rho_x)
            sym_set(d2g, E + mixed, 1, 1, A_xy * ox2 + 2.0 * A_y * x)
            sym_set(d2g, E + mixed, 1, 2, rho_xy * x + rho_y)

        sym_set(d2g, E + (1, 1), 0, 0, A_yy * oy2 + 4.0 * A_y * y + 2.0 * A)
        sym_set(d2g, E + (1, 1), 0, 1, -A_yy * x * y - 2.0 * A_y * x)
        sym_set(d2g, E + (1, 1), 0, 2, -rho_yy * y - 2.0 * rho_y)
        sym_set(d2g, E + (1, 1), 1, 1, A_yy * ox2)
        sym_set(d2g, E + (1, 1), 1, 2, rho_yy * x)

        return g, dg, d2g

    def christoffel(self, p: ChartPoint) -> np.ndarray:
        """Christoffel symbols ``Gamma[..., k, i, j]`` of the chart metric."""
        self._require_native("christoffel")
        if self.native_kappa > 0:
            raise NotImplementedError("the sphere model has no global chart; "
                                      "use cov_deriv/curvature_R directly")
        p = np.asarray(p, dtype=float)
        g, dg, _ = self._metric_blocks(p)
        ginv = np.linalg.inv(g)
        # S[..., i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
        S = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
        return 0.5 * np.einsum("...kl,...ijl->...kij", ginv, S)

    def christoffel_derivs(self, p: ChartPoint) -> np.ndarray:
        """Partial derivatives ``dGamma[..., m, k, i, j]`` of the symbols."""
        self._require_native("christoffel_derivs")
        if self.native_kappa > 0:
            raise NotImplementedError("the sphere model has no global chart")
        p = np.asarray(p, dtype=float)
        g, dg, d2g = self._metric_blocks(p)
        ginv = np.linalg.inv(g)
        dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
        S = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
        dS = d2g + np.swapaxes(d2g, -3, -2) - np.moveaxis(d2g, -3, -1)
        # dS[..., m, i, j, l] = d_m (S[..., i, j, l]); the m-axis of d2g is
        # its first derivative index.
        return 0.5 * (
            np.einsum("...mkl,...ijl->...mkij", dginv, S)
            + np.einsum("...kl,...mijl->...mkij", ginv, dS)
        )

    # ------------------------------------------------------------------
    # covariant derivative and curvature
    # ------------------------------------------------------------------

    def cov_deriv(
        self,
        p: ChartPoint,
        u: np.ndarray,
        field: Callable[[np.ndarray], np.ndarray],
        h: float = 1e-3,
    ) -> np.ndarray:
        """Covariant derivative ``D_u field`` at ``p``.

        ``field`` maps (batched) chart points to tangent vectors.  The
        directional derivative is a fourth-order finite difference along the
        straight chart line (projected back to the sphere for the positive
        model); the connection correction is analytic.
        """
        self._require_native("cov_deriv")
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.native_kappa <= 0:
            stencil = p[..., None, :] + _FD_OFFSETS[:, None] * h * u[..., None, :]
            vals = field(stencil)
            dW = np.einsum("c,...cj->...j", _FD_WEIGHTS, vals) / h
            gamma = self.christoffel(p)
            return dW + np.einsum("...kij,...i,...j->...k", gamma, u, field(p))
        line = p[..., None, :] + _FD_OFFSETS[:, None] * h * u[..., None, :]
        line = line / np.linalg.norm(line, axis=-1, keepdims=True)
        vals = field(line)
        dW = np.einsum("c,...cj->...j", _FD_WEIGHTS, vals) / h
        normal = np.einsum("...j,...j->...", dW, p)
        return dW - normal[..., None] * p

    def curvature_R(
        self, p: ChartPoint, u: np.ndarray, v: np.ndarray, w: np.ndarray
    ) -> np.ndarray:
        """Curvature operator ``R(u, v) w`` in the convention
        ``R(U,V)W = D_V D_U W - D_U D_V W + D_{[U,V]} W``.

        For the chart models this contracts the analytic Christoffel symbols
        and their derivatives; for the sphere model it is the constant-
        curvature closed form ``<u,w> v - <v,w> u`` of the round unit sphere
        (in this sign convention).
        """
        self._require_native("curvature_R")
        p = np.asarray(p, dtype=float)
        u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))
        if self.native_kappa > 0:
            uw = np.einsum("...i,...i->...", u, w)[..., None]
            vw = np.einsum("...i,...i->...", v, w)[..., None]
            return uw * v - vw * u
        gamma = self.christoffel(p)
        dgamma = self.christoffel_derivs(p)
        # R(e_i, e_j) e_k = (d_j G^l_ik - d_i G^l_jk + G^m_ik G^l_jm
        #                    - G^m_jk G^l_im) e_l
        Gu_w = np.einsum("...lim,...i->...lm", gamma, u)      # G^l_{i m} u^i
        Gv_w = np.einsum("...lim,...i->...lm", gamma, v)
        Guw = np.einsum("...lm,...m->...l", Gu_w, w)          # G(u, w)
        Gvw = np.einsum("...lm,...m->...l", Gv_w, w)
        dG_v = np.einsum("...mkij,...m->...kij", dgamma, v)   # d_v Gamma
        dG_u = np.einsum("...mkij,...m->...kij", dgamma, u)
        first = np.einsum("...kij,...i,...j->...k", dG_v, u, w)
        second = np.einsum("...kij,...i,...j->...k", dG_u, v, w)
        third = np.einsum("...lm,...m->...l", Gv_w, Guw)
        fourth = np.einsum("...lm,...m->...l", Gu_w, Gvw)
        return first - second + third - fourth

    def ricci(self, p: ChartPoint, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Ricci curvature ``Ric(u, v)`` (usual trace convention).

        The trace is taken over the adapted orthonormal frame; the bridging
        minus sign accounts for :meth:`curvature_R` using the opposite-sign
        curvature operator.
        """
        frame = self.frame_at(np.asarray(p, dtype=float))
        total = 0.0
        for e in (frame.X, frame.Y, frame.T):
            total = total - self.inner(p, self.curvature_R(p, e, u, v), e)
        return total

    def webster_scalar(self, p: ChartPoint | None = None) -> float:
        """Webster scalar curvature, computed from the curvature operator.

        For a scaled space this applies the homothety law (curvature scales
        by ``1/epsilon^2``) to the native model's value.
        """
        if not self.is_native:
            return self.native.webster_scalar(p) / self.epsilon**2
        if p is None:
            p = self.origin()
        frame = self.frame_at(np.asarray(p, dtype=float))
        sectional = self.inner(p, self.curvature_R(p, frame.X, frame.Y, frame.X), frame.Y)
        return float((sectional + 3.0) / 4.0)

    # ------------------------------------------------------------------
    # horizontal lifts and holonomy
    # ------------------------------------------------------------------

    def horizontal_lift(
        self,
        curve: Callable[[float], np.ndarray],
        n_steps: int = 4096,
        t_start: float = 0.0,
        derivative: Callable[[float], np.ndarray] | None = None,
    ) -> LiftedPath:
        """Horizontal lift of a curve in the quotient surface.

        ``curve`` maps ``u in [0, 1]`` to a planar chart point (2-vector, for
        the kappa <= 0 models) or a unit 3-vector on the quotient sphere
        (kappa > 0).  The lift starts on the fiber over ``curve(0)`` (at
        ``t = t_start`` in the chart models) and integrates the horizontality
        condition with fixed-step RK4.  ``derivative`` may supply the exact
        curve derivative; otherwise a fourth-order finite difference of
        ``curve`` is used.

        For a closed curve traversed once, ``displacement`` equals twice the
        signed area enclosed in the quotient (with respect to the quotient
        orientation for which the curve runs clockwise around its interior).
        """
        if derivative is None:
            def derivative(uu: float) -> np.ndarray:  # noqa: F811 - deliberate default
                hh = 1e-5
                pts = np.stack([np.asarray(curve(uu + c * hh), dtype=float) for c in _FD_OFFSETS])
                return np.einsum("c,cj->j", _FD_WEIGHTS, pts) / hh

        u_grid = np.linspace(0.0, 1.0, n_steps + 1)
        if self.native_kappa <= 0:
            def rhs(state: np.ndarray) -> np.ndarray:
                uu = state[0]
                xy = np.asarray(curve(uu), dtype=float)
                d = np.asarray(derivative(uu), dtype=float)
                rho = 1.0 / (1.0 + self.native_kappa * (xy[0] ** 2 + xy[1] ** 2))
                return np.array([1.0, -rho * (xy[0] * d[1] - xy[1] * d[0])])

            states = rk4_sampled(rhs, np.array([0.0, t_start]), u_grid, 1.0 / n_steps)
            xy = np.stack([np.asarray(curve(uu), dtype=float) for uu in u_grid])
            points = np.column_stack([xy, states[:, 1]])
            displacement = (states[-1, 1] - t_start) * self.epsilon**2
            return LiftedPath(points=points, displacement=float(displacement))

        q0 = _hopf_fiber_point(np.asarray(curve(0.0), dtype=float))

        def rhs(state: np.ndarray) -> np.ndarray:
            uu = state[0]
            q = state[1:]
            cdot = np.asarray(derivative(uu), dtype=float)
            w1, w2 = _quat_j(q), _quat_k(q)
            a = 0.25 * np.dot(_hopf_differential(q, w1), cdot)
            b = 0.25 * np.dot(_hopf_differential(q, w2), cdot)
            return np.concatenate([[1.0], a * w1 + b * w2])

        def project(state: np.ndarray) -> np.ndarray:
            q = state[1:]
            state[1:] = q / np.linalg.norm(q)
            return state

        states = rk4_sampled(rhs, np.concatenate([[0.0], q0]), u_grid, 1.0 / n_steps, project=project)
        points = states[:, 1:]
        z_inner = complex(
            points[-1, 0] * points[0, 0] + points[-1, 1] * points[0, 1]
            + points[-1, 2] * points[0, 2] + points[-1, 3] * points[0, 3],
            points[0, 0] * points[-1, 1] - points[0, 1] * points[-1, 0]
            + points[0, 2] * points[-1, 3] - points[0, 3] * points[-1, 2],
        )
        displacement = np.arctan2(z_inner.imag, z_inner.real) * self.epsilon**2
        return LiftedPath(points=points, displacement=float(displacement))


def make_space(kappa: float) -> SpaceForm:
    """Build the space form of Webster scalar curvature ``kappa``.

    Exactly -1, 0 and 1 give the native models; any other value wraps the
    native model of the same sign with the homothety factor
    ``epsilon = 1/sqrt(|kappa|)``.
    """
    kappa = float(kappa)
    if kappa == 0.0:
        return SpaceForm(kappa=0.0, native_kappa=0, epsilon=1.0)
    sign = 1 if kappa > 0 else -1
    eps = 1.0 / np.sqrt(abs(kappa))
    if kappa in (1.0, -1.0):
        eps = 1.0
    return SpaceForm(kappa=kappa, native_kappa=sign, epsilon=eps)
