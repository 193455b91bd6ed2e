"""Candidate isoperimetric spheres and the other special surfaces.

For ``tau = sqrt(lam**2 + kappa) > 0`` the unit-speed CC-geodesics of
curvature ``lam`` from a point ``p`` all refocus at arc length ``pi/tau``;
the union of those arcs is a topological sphere (the Pansu-type candidate
in the flat model).  This module builds the sphere as a (theta, s) grid of
geodesic samples, provides the closed-form profile quantities along the
meridians, and measures area, enclosed volume and mean curvature from the
grid data so the closed forms can be validated against honest numerics.

Closed-form profile (all functions of ``x = tau * s``, with
``P = 1 + (tau**2 - 1) cos(x)**2``):

* vertical Jacobi component ``v = sin(x)**2 / tau**2`` and its rate,
* Riemannian area density ``sin(x) sqrt(P) / tau**2`` of the (theta, s)
  parameterization,
* unit normal split ``|N_h| = sin(x)/sqrt(P)``, ``<N,T> = tau cos(x)/sqrt(P)``,
* shape-operator entries against the tangent frame ``(Z, S)``
  (``Z`` the geodesic direction, ``S`` the orthogonal tangent direction):
  ``b_zz = 2 lam |N_h|``, ``b_zs = (1 - tau**2)|N_h|**2``,
  ``b_ss = lam tau**2 |N_h| / P``.

The module also carries the complete non-compact counterparts: plane-like
surfaces (``lam**2 + kappa <= 0``), singular strips around a spine geodesic
with their closed-form width, and the graph profile of the hyperbolic-model
sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import __version__  # noqa: F401  (re-exported in mesh headers)
from .geodesics import GeodesicPath, shoot_fan
from .jacobi import VerticalJacobi, tau_root
from .numerics import atomic_write_text, deriv1_uniform, gauss_legendre
from .space_forms import SpaceForm


class ProfileData(NamedTuple):
    """Closed-form meridian profile of a candidate sphere at arc values s.

    Fields: vertical Jacobi component ``v`` and derivative ``dv``; the
    factor ``pfac = 1 + (tau^2-1) cos^2(tau s)``; Riemannian area density
    ``density`` of the (theta, s) grid; horizontal and vertical parts
    ``nh = |N_h|``, ``nt = <N, T>`` of the unit normal; shape operator
    entries ``b_zz, b_zs, b_ss``; and ``index_weight = density / nh``
    (the measure ``|N_h|^{-1} dS`` per unit dtheta ds).
    """

    v: np.ndarray
    dv: np.ndarray
    pfac: np.ndarray
    density: np.ndarray
    nh: np.ndarray
    nt: np.ndarray
    b_zz: np.ndarray
    b_zs: np.ndarray
    b_ss: np.ndarray
    index_weight: np.ndarray


def profile(lam: float, kappa: float, s: np.ndarray) -> ProfileData:
    """Evaluate the closed-form sphere profile at arc-length values ``s``."""
    tau = tau_root(lam, kappa)
    s = np.asarray(s, dtype=float)
    x = tau * s
    sin_x, cos_x = np.sin(x), np.cos(x)
    pfac = 1.0 + (tau * tau - 1.0) * cos_x * cos_x
    sqrt_p = np.sqrt(pfac)
    v = sin_x * sin_x / tau**2
    dv = 2.0 * sin_x * cos_x / tau
    density = sin_x * sqrt_p / tau**2
    nh = sin_x / sqrt_p
    nt = tau * cos_x / sqrt_p
    b_zz = 2.0 * lam * nh
    b_zs = (1.0 - tau * tau) * nh * nh
    b_ss = lam * tau * tau * nh / pfac
    index_weight = pfac / tau**2
    return ProfileData(v=v, dv=dv, pfac=pfac, density=density, nh=nh, nt=nt,
                       b_zz=b_zz, b_zs=b_zs, b_ss=b_ss, index_weight=index_weight)


def shape_potential_defect(lam: float, kappa: float, s: np.ndarray) -> np.ndarray:
    """Defect of the algebraic identity tying the shape entries to the
    stability potential:

        b_zz^2 + (1 + b_zs)^2 + 4 (kappa - 1) nh^2
            = (1 + (tau^2 - 1) nh^2)^2.

    Identically zero for every (lam, kappa) in the focusing regime; the
    returned array is the pointwise difference of the two sides.
    """
    tau = tau_root(lam, kappa)
    prof = profile(lam, kappa, s)
    lhs = prof.b_zz**2 + (1.0 + prof.b_zs) ** 2 + 4.0 * (kappa - 1.0) * prof.nh**2
    rhs = (1.0 + (tau * tau - 1.0) * prof.nh**2) ** 2
    return lhs - rhs


@dataclass
class PansuSphere:
    """A candidate sphere sampled on a (theta, s) geodesic grid.

    ``points`` and ``velocities`` have shape (n_theta, n_s + 1, chart_dim);
    the theta grid is uniform on [0, 2 pi) *without* the duplicated seam
    column, the s grid uniform on [0, pi/tau].  ``pole_spread`` measures the
    maximum chart distance among the meridian endpoints (it certifies the
    refocusing quality of the build).
    """

    space: SpaceForm
    lam: float
    tau: float
    base_point: np.ndarray
    thetas: np.ndarray
    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    pole_spread: float
    conjugate_point: np.ndarray

    @property
    def n_theta(self) -> int:
        return len(self.thetas)

    @property
    def n_s(self) -> int:
        return len(self.s) - 1

    def profile_data(self) -> ProfileData:
        """Closed-form profile along the s grid."""
        return profile(self.lam, self.space.kappa, self.s)

    def theta_derivative(self) -> np.ndarray:
        """Exact derivative of the grid points in the theta direction.

        The grid is band-limited in theta (rotating the launch angle acts
        with frequencies -1, 0, 1 on the chart components in every model),
        so the spectral derivative of the sampled columns is exact up to
        roundoff.  For the sphere model the result is projected back onto
        the tangent spaces.
        """
        freq = np.fft.fftfreq(self.n_theta, d=1.0 / self.n_theta)
        spec = np.fft.fft(self.points, axis=0)
        dpts = np.fft.ifft(spec * (1j * freq)[:, None, None], axis=0).real
        if self.space.chart_dim == 4:
            dot = np.einsum("tsj,tsj->ts", dpts, self.points)
            dpts = dpts - dot[..., None] * self.points
        return dpts

    def frame_components_of_normal(self) -> tuple[np.ndarray, np.ndarray]:
        """Raw normal data of the grid against the adapted frame.

        Returns ``(n, dens)`` where ``n`` has shape (n_theta, n_s+1, 3): the
        cross product of the components of the two grid tangents against the
        orthonormal adapted frame (X, Y, T).  Its direction is the unit
        normal in frame components, its length the Riemannian area density
        of the parameterization; the global sign is normalized so the
        vertical component is positive at small s.
        """
        pts = self.points
        vel = self.velocities
        vth = self.theta_derivative()
        fr = self.space.frame_at(pts)
        g = self.space.metric(pts)

        def comps(w: np.ndarray) -> np.ndarray:
            return np.stack(
                [np.einsum("...ij,...i,...j->...", g, w, e) for e in (fr.X, fr.Y, fr.T)],
                axis=-1,
            )

        z = comps(vel)
        vt = comps(vth)
        n = np.cross(vt, z)
        dens = np.linalg.norm(n, axis=-1)
        # fix the global orientation: vertical component positive near the
        # base pole (the normal there degenerates to +T or -T)
        j_ref = max(1, self.n_s // 8)
        if n[:, j_ref, 2].mean() < 0.0:
            n = -n
        return n, dens


def build_sphere(
    space: SpaceForm,
    p: np.ndarray,
    lam: float,
    n_theta: int = 128,
    n_s: int = 128,
    step: float = 1e-3,
) -> PansuSphere:
    """Build the candidate sphere of curvature ``lam`` centered at ``p``.

    Requires the focusing condition ``lam**2 + kappa > 0`` (and a positive
    ``lam`` in the nonpositive-curvature models, where ``lam = 0`` gives a
    plane instead).
    """
    if lam < 0.0 or (lam == 0.0 and space.kappa <= 0.0):
        raise ValueError("build_sphere needs lam > 0 (lam >= 0 in positive curvature)")
    tau = tau_root(lam, space.kappa)
    p = np.asarray(p, dtype=float)
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    s_values = np.linspace(0.0, np.pi / tau, n_s + 1)
    points, velocities = shoot_fan(space, p, lam, thetas, s_values, step=step)
    endpoints = points[:, -1, :]
    diffs = endpoints[:, None, :] - endpoints[None, :, :]
    spread = float(np.sqrt((diffs**2).sum(axis=-1)).max())
    return PansuSphere(
        space=space,
        lam=lam,
        tau=tau,
        base_point=p,
        thetas=thetas,
        s=s_values,
        points=points,
        velocities=velocities,
        pole_spread=spread,
        conjugate_point=endpoints.mean(axis=0),
    )


def area(sphere: PansuSphere) -> float:
    """CC-area of the sphere, measured from the grid.

    Integrates ``|N_h| dS`` with the numeric normal and density of
    :meth:`PansuSphere.frame_components_of_normal`.  Both grid directions
    use the trapezoid rule; in theta the integrand is periodic and in s its
    smooth periodic extension across the poles makes the rule spectrally
    accurate, so the result is limited by the geodesic integration, not the
    quadrature.  The closed-form value is ``pi**2 / tau**3``.
    """
    n, _ = sphere.frame_components_of_normal()
    integrand = np.hypot(n[..., 0], n[..., 1])
    dtheta = 2.0 * np.pi / sphere.n_theta
    return float(np.trapezoid(integrand, sphere.s, axis=1).sum() * dtheta)


def closed_form_area(lam: float, kappa: float) -> float:
    """``pi**2 / (lam**2 + kappa)**(3/2)``, the exact CC-area."""
    return float(np.pi**2 / tau_root(lam, kappa) ** 3)


def closed_form_volume_flat(lam: float) -> float:
    """Exact enclosed volume ``3 pi**2 / (8 lam**4)`` in the flat model."""
    return float(3.0 * np.pi**2 / (8.0 * lam**4))


def _fiber_phase(q_end: np.ndarray, q_start: np.ndarray) -> float:
    """Phase ``delta`` with ``q_end = exp(i delta) q_start`` on a fiber."""
    re = float(np.dot(q_end, q_start))
    im = float(
        q_start[0] * q_end[1] - q_start[1] * q_end[0]
        + q_start[2] * q_end[3] - q_start[3] * q_end[2]
    )
    return float(np.arctan2(im, re))


def _meridian_disk_polygon(sphere: PansuSphere, n_arc: int = 2048) -> np.ndarray:
    """Closed polygon in the complex ``z1`` coordinate of the orbit space.

    The sphere model is rotationally symmetric under conjugation by the
    fiber circle of the base point's axis; the quotient is faithfully
    coordinatized by ``z1 = (q_0, q_1)``.  The boundary of the enclosed
    region consists of the meridian's ``z1`` trace plus the axis-fiber arc
    joining the conjugate point's phase back to the base point.
    """
    meridian = sphere.points[0]
    radius = float(np.hypot(meridian[0, 0], meridian[0, 1]))
    if abs(radius - 1.0) > 1e-9:
        raise NotImplementedError(
            "sphere-model volume assumes the base point lies on the axis "
            "circle z2 = 0 (conjugation symmetry); move the base point there"
        )
    z1 = meridian[:, :2]
    phase_end = _fiber_phase(meridian[-1], meridian[0])
    base_phase = float(np.arctan2(meridian[0, 1], meridian[0, 0]))
    arc_t = base_phase + np.linspace(phase_end, 0.0, n_arc)
    arc = radius * np.column_stack([np.cos(arc_t), np.sin(arc_t)])
    return np.vstack([z1, arc])


def enclosed_volume_slicing(sphere: PansuSphere) -> float:
    """Enclosed volume via the rotational-symmetry reduction (oracle route).

    Chart models: slices ``t = const`` are metric disks centered on the
    axis through the base point, so ``V = |oint A_disk(r) dt|`` along the
    meridian with the closed-form disk area (``pi r^2`` flat,
    ``pi r^2/(1-r^2)`` hyperbolic).  Sphere model: the quotient by the fiber
    rotation reduces the volume to ``2 pi`` times the Euclidean area of the
    orbit region in the ``z1`` disk.  Scaled spaces multiply by
    ``epsilon**4`` (the volume scaling of the homothety).
    """
    space = sphere.space
    if space.native_kappa <= 0:
        meridian = sphere.points[0]
        base = sphere.base_point
        x = meridian[:, 0] - base[0]
        y = meridian[:, 1] - base[1]
        if space.native_kappa < 0 and (abs(base[0]) > 1e-12 or abs(base[1]) > 1e-12):
            raise NotImplementedError("slicing in the hyperbolic model assumes "
                                      "an axis-centered sphere")
        r2 = x * x + y * y
        if space.native_kappa < 0:
            disk_area = np.pi * r2 / (1.0 - r2)
        else:
            disk_area = np.pi * r2
        t = meridian[:, 2]
        vol = abs(np.trapezoid(disk_area, t))
        return float(vol * space.epsilon**4)
    poly = _meridian_disk_polygon(sphere)
    x, y = poly[:, 0], poly[:, 1]
    shoelace = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return float(2.0 * np.pi * shoelace * space.epsilon**4)


def enclosed_volume(
    sphere: PansuSphere,
    n_theta: int = 64,
    n_s: int = 96,
    n_qmc_log2: int = 19,
    seed: int = 20439,
    step: float = 1e-3,
) -> float:
    """Riemannian volume enclosed by the sphere.

    Chart models: flux of the vertical field ``(t - t_p) T`` (unit
    divergence) through the surface, evaluated on a dedicated fan sampled at
    Gauss-Legendre arc values — the normal orientation is fixed by taking
    the absolute value.  Sphere model: quasi-Monte-Carlo volume of the
    enclosed region, testing Sobol points of the ball against the orbit
    region of the quotient disk (the slicing route is the cross-check, not
    the primary).  Scaled spaces multiply by ``epsilon**4``.
    """
    space = sphere.space
    if space.native_kappa <= 0:
        s_nodes, s_weights = gauss_legendre(n_s, 0.0, np.pi / sphere.tau)
        thetas = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
        s_values = np.concatenate([[0.0], s_nodes])
        pts, vel = shoot_fan(space, sphere.base_point, sphere.lam, thetas, s_values, step=step)
        work = PansuSphere(
            space=space, lam=sphere.lam, tau=sphere.tau,
            base_point=sphere.base_point, thetas=thetas, s=s_values,
            points=pts, velocities=vel, pole_spread=0.0,
            conjugate_point=pts[:, -1, :].mean(axis=0),
        )
        n, _ = work.frame_components_of_normal()
        t_rel = pts[..., 2] - sphere.base_point[2]
        integrand = t_rel[:, 1:] * n[:, 1:, 2]
        dtheta = 2.0 * np.pi / n_theta
        flux = (integrand * s_weights[None, :]).sum() * dtheta
        # the integrand carries scaled-frame components (epsilon**2 per
        # grid cell relative to the native ones), the volume law is
        # epsilon**4, so the leftover factor is epsilon**2
        return float(abs(flux) * space.epsilon**2)

    from scipy.stats import qmc
    from matplotlib.path import Path

    poly = _meridian_disk_polygon(sphere)
    path = Path(poly, closed=True)
    sampler = qmc.Sobol(d=4, scramble=True, seed=seed)
    pts4 = 2.0 * sampler.random_base2(m=n_qmc_log2) - 1.0
    r = np.linalg.norm(pts4, axis=1)
    in_ball = (r <= 1.0) & (r > 0.0)
    radial = pts4[in_ball] / r[in_ball, None]
    inside = path.contains_points(radial[:, :2])
    # Points uniform in [-1,1]^4 (volume 16) hit the solid cone over the
    # region with probability vol(cone)/16, and the r^3 radial weight makes
    # vol(cone) = vol_{S^3}(region)/4 — hence the factor 64.
    vol = 64.0 * inside.sum() / len(pts4)
    return float(vol * space.epsilon**4)


def mean_curvature_numeric(
    sphere: PansuSphere,
    n_points: int | None = 100,
    seed: int = 0,
) -> np.ndarray:
    """Mean curvature of the sphere via connection-level numerics.

    Reconstructs the horizontal unit normal from the numeric grid normal,
    differentiates it covariantly along the two grid directions (fourth-
    order stencils in s, exact spectral derivative in theta, with the
    analytic connection correction of the native model), and evaluates

        H = -(1/2) ( <D_Z nu_h, Z> + <D_S nu_h, S> )

    on the grid band away from the two poles.  The sign convention makes
    the candidate sphere come out with ``H = +lam``.  Returns the values at
    ``n_points`` randomly chosen interior grid nodes (all of the band when
    ``n_points`` is None).  Scaled spaces evaluate natively and divide by
    ``epsilon`` (the homothety law for mean curvature).
    """
    space = sphere.space
    nat = space.native
    eps = space.epsilon

    pts = sphere.points
    vel_nat = eps * sphere.velocities
    u_grid = sphere.s / eps
    du = u_grid[1] - u_grid[0]

    vth = sphere.theta_derivative()
    fr = nat.frame_at(pts)
    g = nat.metric(pts)

    def comps(w: np.ndarray) -> np.ndarray:
        return np.stack(
            [np.einsum("...ij,...i,...j->...", g, w, e) for e in (fr.X, fr.Y, fr.T)],
            axis=-1,
        )

    n = np.cross(comps(vth), comps(vel_nat))
    j_ref = max(1, sphere.n_s // 8)
    if n[:, j_ref, 2].mean() < 0.0:
        n = -n

    band = slice(1, sphere.n_s)  # open band: poles excluded
    n_band = n[:, band, :]
    norm_n = np.linalg.norm(n_band, axis=-1)
    nh = np.hypot(n_band[..., 0], n_band[..., 1]) / norm_n
    nt = n_band[..., 2] / norm_n
    hor = np.hypot(n_band[..., 0], n_band[..., 1])
    nu_h = (n_band[..., 0, None] * fr.X[:, band] + n_band[..., 1, None] * fr.Y[:, band])
    nu_h = nu_h / hor[..., None]

    pts_b = pts[:, band]
    vel_b = vel_nat[:, band]
    vth_b = vth[:, band]
    t_b = nat.vertical_at(pts_b)

    # covariant derivatives of nu_h along the two grid directions
    d_s = deriv1_uniform(nu_h, du, axis=1)
    freq = np.fft.fftfreq(sphere.n_theta, d=1.0 / sphere.n_theta)
    d_th = np.fft.ifft(np.fft.fft(nu_h, axis=0) * (1j * freq)[:, None, None], axis=0).real
    if nat.native_kappa <= 0:
        gamma = nat.christoffel(pts_b)
        dz_nu = d_s + np.einsum("...kij,...i,...j->...k", gamma, vel_b, nu_h)
        dth_nu = d_th + np.einsum("...kij,...i,...j->...k", gamma, vth_b, nu_h)
    else:
        dz_nu = d_s - np.einsum("...j,...j->...", d_s, pts_b)[..., None] * pts_b
        dth_nu = d_th - np.einsum("...j,...j->...", d_th, pts_b)[..., None] * pts_b

    s_vec = nt[..., None] * nu_h - nh[..., None] * t_b

    def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...i,...j->...", nat.metric(pts_b), a, b)

    a12 = inner(vel_b, vth_b)
    a22 = inner(vth_b, vth_b)
    b1 = inner(s_vec, vel_b)
    b2 = inner(s_vec, vth_b)
    beta = (b2 - a12 * b1) / (a22 - a12 * a12)
    alpha = b1 - a12 * beta
    ds_nu = alpha[..., None] * dz_nu + beta[..., None] * dth_nu

    div = inner(dz_nu, vel_b) + inner(ds_nu, s_vec)
    h_grid = -0.5 * div / eps

    if n_points is None:
        return h_grid
    rng = np.random.default_rng(seed)
    n_s_band = h_grid.shape[1]
    ii = rng.integers(0, sphere.n_theta, size=n_points)
    jj = rng.integers(1, n_s_band - 1, size=n_points)
    return h_grid[ii, jj]


@dataclass
class PlanePatch:
    """A plane-like complete surface patch: the fan of geodesics of
    curvature ``lam`` from a point, in the non-refocusing regime
    ``lam**2 + kappa <= 0``, sampled to radius ``s_max``."""

    space: SpaceForm
    lam: float
    base_point: np.ndarray
    thetas: np.ndarray
    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray


def build_plane(
    space: SpaceForm,
    p: np.ndarray,
    lam: float = 0.0,
    s_max: float = 2.0,
    n_theta: int = 64,
    n_s: int = 64,
    step: float = 1e-3,
) -> PlanePatch:
    """Build the plane-like surface of curvature ``lam`` centered at ``p``.

    Requires ``lam**2 + kappa <= 0`` (otherwise the fan refocuses and the
    surface closes up into a sphere: use :func:`build_sphere`).
    """
    if lam * lam + space.kappa > 0.0:
        raise ValueError("plane-like surfaces need lam**2 + kappa <= 0")
    p = np.asarray(p, dtype=float)
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    s_values = np.linspace(0.0, s_max, n_s + 1)
    points, velocities = shoot_fan(space, p, lam, thetas, s_values, step=step)
    return PlanePatch(space=space, lam=lam, base_point=p, thetas=thetas,
                      s=s_values, points=points, velocities=velocities)


def cmula_strip_width(h: float, lam: float, kappa: float) -> float | None:
    """Width of the singular strip: first positive zero of the vertical
    Jacobi solution with initial data ``v = 0, v' = -2, v'' = 2 h``.

    ``h`` encodes the geodesic-curvature data of the spine against the ray
    direction.  Closed forms by the sign of ``tau4 = 4 (lam**2 + kappa)``:

    * ``tau4 > 0``: ``2 atan2(sqrt(tau4), h) / sqrt(tau4)`` (always finite),
    * ``tau4 = 0``: ``2 / h`` for ``h > 0``, otherwise no zero,
    * ``tau4 < 0``: ``2 artanh(sqrt(-tau4)/h) / sqrt(-tau4)`` for
      ``h > sqrt(-tau4)``, otherwise no zero.

    Returns None when the strip never closes.
    """
    t4 = 4.0 * (lam * lam + kappa)
    if t4 > 0.0:
        m = np.sqrt(t4)
        return float(2.0 * np.arctan2(m, h) / m)
    if t4 == 0.0:
        return float(2.0 / h) if h > 0.0 else None
    m = np.sqrt(-t4)
    if h > m:
        return float(2.0 * np.arctanh(m / h) / m)
    return None


@dataclass
class StripPatch:
    """A ruled strip of geodesics of curvature ``lam`` leaving a spine
    geodesic orthogonally on one side."""

    space: SpaceForm
    spine: GeodesicPath
    lam: float
    side: int
    width: float | None
    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray


def build_strip(
    space: SpaceForm,
    spine: GeodesicPath,
    lam: float,
    side: int = 1,
    s_max: float | None = None,
    n_s: int = 64,
    step: float = 1e-3,
) -> StripPatch:
    """Rule geodesics of curvature ``lam`` out of the ``side * J`` direction
    of a spine geodesic.

    The spine's own curvature ``mu = spine.lam`` determines the strip
    parameter ``h = -2 * side * mu``; when the corresponding vertical Jacobi
    solution has a first zero, the rays refocus on a singular curve at that
    width, which caps the sampled s range unless ``s_max`` overrides it.
    """
    from .geodesics import _native_project, _native_rhs
    from .numerics import rk4_sampled

    h = -2.0 * side * spine.lam
    width = cmula_strip_width(h, lam, space.kappa)
    reach = width if width is not None else s_max
    if reach is None:
        raise ValueError("strip never closes; provide s_max")
    if s_max is not None:
        reach = min(reach, s_max) if width is not None else s_max
    ray_dirs = side * space.jmap(spine.points, spine.velocities)
    v0_native = space.epsilon * ray_dirs
    s_values = np.linspace(0.0, reach, n_s + 1)
    d = space.chart_dim
    state0 = np.concatenate([spine.points, v0_native], axis=-1)

    states = rk4_sampled(
        _native_rhs(space, lam * space.epsilon),
        state0,
        s_values / space.epsilon,
        max_step=step / space.epsilon,
        project=_native_project(space),
    )
    points = np.moveaxis(states[..., :d], 0, 1)
    velocities = np.moveaxis(states[..., d:], 0, 1) / space.epsilon
    return StripPatch(space=space, spine=spine, lam=lam, side=side, width=width,
                      s=s_values, points=points, velocities=velocities)


def hyperbolic_profile(lam: float):
    """Meridian graph profile of the hyperbolic-model sphere (`kappa = -1`,
    ``lam > 1``), as a function of the planar chart radius ``x`` on
    ``[0, 1/lam]``.

    The profile gives the fiber coordinate of the lower half of the sphere
    relative to its equator: ``f`` is negative on ``[0, 1/lam)``, increasing,
    with ``f(1/lam) = 0`` exactly.  Implemented with ``arctan2`` forms that
    stay exact at the closing radius.
    """
    if lam <= 1.0:
        raise ValueError("the hyperbolic-model sphere profile needs lam > 1")
    q = lam / np.sqrt(lam * lam - 1.0)

    def f(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = np.sqrt(np.maximum(1.0 - lam * lam * x * x, 0.0))
        first = np.arctan2(np.sqrt(lam * lam - 1.0) * x, w)
        second = np.arctan2(lam * x, w)
        return 0.5 * np.pi * (1.0 - q) + q * first - second

    return f


def mesh_vertices(sphere: PansuSphere) -> np.ndarray:
    """Grid vertices in 3-space for mesh export.

    Chart models export the raw chart coordinates.  The sphere model is
    mapped by stereographic projection from the axis-fiber point opposite
    the surface (phase halfway between the two poles, plus pi), which never
    lies on the sphere, so the projection is finite on all vertices.
    """
    if sphere.space.chart_dim == 3:
        return sphere.points
    meridian = sphere.points[0]
    delta = _fiber_phase(meridian[-1], meridian[0])
    p0 = sphere.base_point
    half = 0.5 * delta
    center = -(np.cos(half) * p0 + np.sin(half) * _quat_i_vec(p0))
    basis = _orthobasis(center)
    rel = sphere.points - np.einsum("tsj,j->ts", sphere.points, center)[..., None] * center
    denom = 1.0 - np.einsum("tsj,j->ts", sphere.points, center)
    coords = np.einsum("tsj,jk->tsk", rel, basis)
    return coords / denom[..., None]


def _quat_i_vec(p: np.ndarray) -> np.ndarray:
    return np.array([-p[1], p[0], -p[3], p[2]])


def _orthobasis(c: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the orthogonal complement of
    ``c`` in R^4, as a (4, 3) matrix of column vectors."""
    m = np.column_stack([c, np.eye(4)])
    q, _ = np.linalg.qr(m)
    return q[:, 1:4]


def export_mesh(sphere: PansuSphere, obj_path: str, csv_path: str | None = None) -> None:
    """Write the sphere as a watertight OBJ triangle mesh (atomically).

    One vertex per grid node on the open band, plus a single vertex for each
    pole (the ``theta = 0`` meridian's first and last samples).  Vertex
    coordinates use 17 significant digits so they round-trip bit-for-bit
    against the grid evaluation.  ``csv_path`` optionally writes a sidecar
    table with the closed-form normal profile per vertex.
    """
    verts3 = mesh_vertices(sphere)
    n_th, n_s = sphere.n_theta, sphere.n_s
    prof = sphere.profile_data()

    lines = [
        f"# candidate sphere mesh (srforms {__version__})",
        f"# lam={sphere.lam!r} kappa={sphere.space.kappa!r} "
        f"n_theta={n_th} n_s={n_s}",
    ]
    rows = [("index", "theta", "s", "nh", "nt")]

    def fmt(x: float) -> str:
        return f"{x:.17g}"

    vert_count = 0

    def add_vertex(v3: np.ndarray, theta: float, s_idx: int) -> int:
        nonlocal vert_count
        lines.append("v " + " ".join(fmt(c) for c in v3))
        vert_count += 1
        rows.append((str(vert_count), fmt(theta), fmt(sphere.s[s_idx]),
                     fmt(float(prof.nh[s_idx])), fmt(float(prof.nt[s_idx]))))
        return vert_count

    base_idx = add_vertex(verts3[0, 0], 0.0, 0)
    ring_idx = np.zeros((n_th, n_s - 1), dtype=int)
    for j in range(1, n_s):
        for i in range(n_th):
            ring_idx[i, j - 1] = add_vertex(verts3[i, j], float(sphere.thetas[i]), j)
    apex_idx = add_vertex(verts3[0, n_s], 0.0, n_s)

    faces = []
    for i in range(n_th):
        i2 = (i + 1) % n_th
        faces.append((base_idx, ring_idx[i, 0], ring_idx[i2, 0]))
    for j in range(n_s - 2):
        for i in range(n_th):
            i2 = (i + 1) % n_th
            a, b = ring_idx[i, j], ring_idx[i2, j]
            c, d = ring_idx[i2, j + 1], ring_idx[i, j + 1]
            faces.append((a, b, c))
            faces.append((a, c, d))
    for i in range(n_th):
        i2 = (i + 1) % n_th
        faces.append((ring_idx[i, n_s - 2], apex_idx, ring_idx[i2, n_s - 2]))
    lines.extend("f {} {} {}".format(*face) for face in faces)
    atomic_write_text(obj_path, "\n".join(lines) + "\n")
    if csv_path is not None:
        atomic_write_text(csv_path, "\n".join(",".join(r) for r in rows) + "\n")


class GridFrameData(NamedTuple):
    """Numeric normal/tangent data of a sphere grid on the open band
    (pole rows excluded; all arrays shaped (n_theta, n_s - 1, ...))."""

    band: slice
    points: np.ndarray
    velocities: np.ndarray      # Z, the unit meridian direction
    theta_tangent: np.ndarray   # d(points)/d(theta)
    normal_raw: np.ndarray      # frame components of the unnormalized normal
    density: np.ndarray         # Riemannian area density of the (theta, s) grid
    nh: np.ndarray              # |N_h|
    nt: np.ndarray              # <N, T>
    nu_h: np.ndarray            # horizontal unit normal (chart vector)
    s_vec: np.ndarray           # tangent direction S = <N,T> nu_h - |N_h| T
    alpha: np.ndarray           # S = alpha * Z + beta * theta_tangent
    beta: np.ndarray


def grid_frame_data(sphere: PansuSphere) -> GridFrameData:
    """Assemble the numeric surface data used by curvature and stability
    computations: unit normal split, horizontal normal, the tangent
    direction ``S`` and its decomposition in the grid basis."""
    space = sphere.space
    n, dens = sphere.frame_components_of_normal()
    band = slice(1, sphere.n_s)
    pts = sphere.points[:, band]
    vel = sphere.velocities[:, band]
    vth = sphere.theta_derivative()[:, band]
    n_b = n[:, band]
    dens_b = dens[:, band]
    nh = np.hypot(n_b[..., 0], n_b[..., 1]) / dens_b
    nt = n_b[..., 2] / dens_b
    fr = space.frame_at(pts)
    hor = np.hypot(n_b[..., 0], n_b[..., 1])
    nu_h = (n_b[..., 0, None] * fr.X + n_b[..., 1, None] * fr.Y) / hor[..., None]
    t_vec = space.vertical_at(pts)
    s_vec = nt[..., None] * nu_h - nh[..., None] * t_vec
    g = space.metric(pts)

    def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...i,...j->...", g, a, b)

    a12 = inner(vel, vth)
    a22 = inner(vth, vth)
    b1 = inner(s_vec, vel)
    b2 = inner(s_vec, vth)
    beta = (b2 - a12 * b1) / (a22 - a12 * a12)
    alpha = b1 - a12 * beta
    return GridFrameData(band=band, points=pts, velocities=vel,
                         theta_tangent=vth, normal_raw=n_b, density=dens_b,
                         nh=nh, nt=nt, nu_h=nu_h, s_vec=s_vec,
                         alpha=alpha, beta=beta)
