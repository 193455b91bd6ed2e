"""Acceptance suite.

One test per shipping criterion; each records a single PASS/FAIL line with
the measured figure, replayed as a scorecard in the terminal summary.
Tolerances are pinned here and are not to be loosened without a recorded
decision.
"""

from __future__ import annotations

import numpy as np

from srforms import (area, build_sphere, cut_length, make_space, shoot,
                     tau_root)
from srforms.geodesics import verify_focusing
from srforms.jacobi import (flow_variation_fd, rotation_field_closed_form,
                            rotation_field_ode)
from srforms.spheres import (closed_form_area, closed_form_volume_flat,
                             enclosed_volume, hyperbolic_profile,
                             mean_curvature_numeric, shape_potential_defect)
from srforms.isoperimetry import compare_at_volume, scan_interval
from srforms import stability
from srforms.stability import (ConstantOne, RadialVertical, TestFunction,
                               VerticalComponent, divergence_integrals,
                               fourier_sequence_functional,
                               fourier_sequence_sos, index_form,
                               meanzero_scan, random_constrained_sequence,
                               second_variation_fd, wirtinger_scan)

from conftest import base_point_of, record_scorecard
from test_space_forms import random_points, random_tangents, tangent_field

FOCUS_PAIRS = [(1.0, 0.0), (0.0, 1.0), (2.0, -1.0), (0.5, 0.5)]


def _verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{name}: {'PASS' if ok else 'FAIL'} ({detail})"
    record_scorecard(line)
    assert ok, line


def test_ac01_cut_point_focusing(sphere_cache):
    worst = 0.0
    for lam, kappa in FOCUS_PAIRS:
        space = make_space(kappa)
        report = verify_focusing(space, base_point_of(space), lam, n_rays=16)
        assert report.cut_length == cut_length(lam, kappa)
        worst = max(worst, report.spread)
    _verdict("AC01 cut-point focusing", worst < 1e-6,
             f"max endpoint spread {worst:.3e} over {len(FOCUS_PAIRS)} pairs")


def test_ac02_jacobi_triple_agreement():
    worst = 0.0
    for lam, kappa in FOCUS_PAIRS:
        space = make_space(kappa)
        base = base_point_of(space)
        length = cut_length(lam, kappa)
        path = shoot(space, base, lam, theta=0.8, length=length, n_samples=48)
        closed = rotation_field_closed_form(path).vectors
        ode = rotation_field_ode(path).vectors
        flow = flow_variation_fd(space, base, lam, 0.8, path.s)
        worst = max(worst, float(np.max(np.abs(closed - ode))),
                    float(np.max(np.abs(closed - flow))))
    _verdict("AC02 Jacobi triple agreement", worst < 1e-5,
             f"max route disagreement {worst:.3e}")


def test_ac03_structure_identity_suite():
    worst = 0.0
    worst_webster = 0.0
    for kappa in (-1.0, 0.0, 1.0):
        space = make_space(kappa)
        rng = np.random.default_rng(31)
        pts = random_points(space, 1000, rng)
        u = random_tangents(space, pts, rng)
        v_rand = random_tangents(space, pts, rng)
        t = space.vertical_at(pts)

        c = rng.normal(size=space.chart_dim)
        v_field = tangent_field(space, c)
        v = v_field(pts)
        jv_field = lambda q: space.jmap(q, v_field(q))
        lhs = space.cov_deriv(pts, u, jv_field)
        rhs = (space.jmap(pts, space.cov_deriv(pts, u, v_field))
               + space.inner(pts, v, t)[:, None] * u
               - space.inner(pts, u, v)[:, None] * t)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))

        lhs = space.curvature_R(pts, u, v_rand, t)
        rhs = (space.inner(pts, u, t)[:, None] * v_rand
               - space.inner(pts, v_rand, t)[:, None] * u)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))

        uh = space.horizontal_part(pts, u)
        ju = space.jmap(pts, uh)
        lhs = space.curvature_R(pts, uh, v_rand, uh)
        rhs = ((4.0 * kappa - 3.0) * space.inner(pts, v_rand, ju)[:, None] * ju
               + (space.norm(pts, uh) ** 2
                  * space.inner(pts, v_rand, t))[:, None] * t)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))

        vh = space.horizontal_part(pts, v_rand)
        lhs = space.ricci(pts, v_rand, v_rand)
        rhs = ((4.0 * kappa - 2.0) * space.norm(pts, vh) ** 2
               + 2.0 * space.inner(pts, v_rand, t) ** 2)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))

        for p in random_points(space.native, 20, rng):
            worst_webster = max(worst_webster,
                                abs(space.webster_scalar(p) - kappa))
    ok = worst < 1e-9 and worst_webster < 1e-6
    _verdict("AC03 structure identity suite", ok,
             f"max identity defect {worst:.3e}, "
             f"max Webster defect {worst_webster:.3e}")


def test_ac04_holonomy_displacement():
    worst = 0.0
    two_pi = 2.0 * np.pi
    cases = [(-1.0, 0.5), (0.0, 1.0), (0.0, 0.35), (-1.0, 0.8)]
    for kappa, radius in cases:
        space = make_space(kappa)
        curve = lambda u: np.array([radius * np.cos(-two_pi * u),
                                    radius * np.sin(-two_pi * u)])
        deriv = lambda u: -two_pi * radius * np.array(
            [-np.sin(-two_pi * u), np.cos(-two_pi * u)])
        lift = space.horizontal_lift(curve, n_steps=4096, derivative=deriv)
        expected = 2.0 * np.pi * radius**2 / (1.0 + kappa * radius**2)
        worst = max(worst, abs(lift.displacement - expected))
    space = make_space(1.0)
    for alpha in (np.pi / 3.0, np.pi / 5.0):
        curve = lambda u: np.array([np.sin(alpha) * np.cos(-two_pi * u),
                                    np.sin(alpha) * np.sin(-two_pi * u),
                                    np.cos(alpha)])
        deriv = lambda u: -two_pi * np.sin(alpha) * np.array(
            [-np.sin(-two_pi * u), np.cos(-two_pi * u), 0.0])
        lift = space.horizontal_lift(curve, n_steps=4096, derivative=deriv)
        expected = np.pi * (1.0 - np.cos(alpha))
        worst = max(worst, abs(lift.displacement - expected))
    _verdict("AC04 holonomy = 2x area", worst < 1e-6,
             f"max displacement defect {worst:.3e}, kappa in {{-1, 0, 1}}")


def test_ac05_sphere_closed_forms(sphere_cache):
    worst_area = 0.0
    worst_vol = 0.0
    for lam in (0.75, 1.0, 2.0):
        sphere = sphere_cache(lam, 0.0)
        worst_area = max(worst_area, abs(area(sphere) / (np.pi**2 / lam**3)
                                         - 1.0))
        worst_vol = max(worst_vol,
                        abs(enclosed_volume(sphere)
                            / closed_form_volume_flat(lam) - 1.0))
    for lam, kappa in [(1.0, 1.0), (2.0, -1.0), (0.5, 0.5), (0.0, 1.0)]:
        sphere = sphere_cache(lam, kappa)
        worst_area = max(worst_area,
                         abs(area(sphere) / closed_form_area(lam, kappa)
                             - 1.0))
    ok = worst_area < 1e-6 and worst_vol < 1e-4
    _verdict("AC05 sphere area/volume closed forms", ok,
             f"max area rel err {worst_area:.3e}, "
             f"max flat volume rel err {worst_vol:.3e}")


def test_ac06_mean_curvature(sphere_cache):
    worst = 0.0
    for lam, kappa in [(1.0, 0.0), (0.0, 1.0), (2.0, -1.0)]:
        sphere = sphere_cache(lam, kappa)
        h_vals = mean_curvature_numeric(sphere, n_points=100, seed=0)
        worst = max(worst, float(np.max(np.abs(h_vals - lam))))
    _verdict("AC06 mean curvature = lam", worst < 1e-4,
             f"max |H - lam| {worst:.3e} at 100 random points x 3 pairs")


def test_ac07_potential_identity():
    worst = 0.0
    for lam, kappa in FOCUS_PAIRS + [(1.0, 1.0)]:
        tau = tau_root(lam, kappa)
        s = np.linspace(0.0, np.pi / tau, 513)
        worst = max(worst,
                    float(np.max(np.abs(shape_potential_defect(lam, kappa,
                                                               s)))))
    _verdict("AC07 shape/potential identity", worst < 1e-10,
             f"max pointwise defect {worst:.3e}")


def test_ac08_index_form_routes():
    rng = np.random.default_rng(41)
    worst = 0.0
    for k in range(20):
        tau = 1.0 if k % 2 == 0 else np.sqrt(3.0)
        u = TestFunction.random((8, 8), rng)
        polar = index_form(tau, u, route="polar")
        direct = index_form(tau, u, route="direct")
        worst = max(worst, abs(polar - direct))
    _verdict("AC08 index-form route agreement", worst < 1e-8,
             f"max |polar - direct| {worst:.3e} over 20 random functions")


def test_ac09_distinguished_values():
    worst_const = 0.0
    worst_null = 0.0
    for lam, kappa in [(1.0, 0.0), (2.0, -1.0), (0.5, 0.5)]:
        tau = tau_root(lam, kappa)
        worst_const = max(worst_const,
                          abs(index_form(tau, ConstantOne()) + 2.0 * np.pi**2))
        worst_null = max(worst_null,
                         abs(index_form(tau, VerticalComponent(tau))))
    ok = worst_const < 1e-8 and worst_null < 1e-9
    _verdict("AC09 distinguished index values", ok,
             f"|I(1,1) + 2 pi^2| {worst_const:.3e}, "
             f"|I(nt,nt)| {worst_null:.3e}")


def test_ac10_strong_stability_scans():
    poles = wirtinger_scan(1.0, trials=500, mode="poles", truncation=(8, 8),
                           seed=0)
    equator = wirtinger_scan(1.0, trials=500, mode="equator",
                             truncation=(8, 8), seed=0)
    worst = min(poles.value, equator.value)
    ok = poles.passed and equator.passed
    _verdict("AC10 strong stability (poles/equator)", ok,
             f"min normalized I {worst:.3e} over 2 x 500 trials")


def test_ac11_volume_constrained_scan():
    report = meanzero_scan(1.0, trials=1000, truncation=(8, 8), seed=0)
    again = meanzero_scan(1.0, trials=1000, truncation=(8, 8), seed=0)
    ok = report.passed and again.value == report.value
    _verdict("AC11 volume-constrained stability", ok,
             f"min normalized I {report.value:.3e} over 1000 trials, "
             f"seed-reproducible")


def test_ac12_fourier_sequence_lemma():
    rng = np.random.default_rng(2026)
    worst_value = np.inf
    for _ in range(10000):
        x = random_constrained_sequence(50, rng)
        worst_value = min(worst_value, fourier_sequence_functional(x))
    worst_sos = 0.0
    for n in range(1, 51):
        x = random_constrained_sequence(n, rng)
        worst_sos = max(worst_sos, abs(fourier_sequence_functional(x)
                                       - fourier_sequence_sos(x)))
    ok = worst_value >= -1e-12 and worst_sos < 1e-10
    _verdict("AC12 Fourier sequence inequality", ok,
             f"min functional {worst_value:.3e} over 10000 draws, "
             f"max SOS defect {worst_sos:.3e} for n <= 50")


def test_ac13_second_variation_oracle(sphere_cache):
    sphere = sphere_cache(1.0, 0.0)
    tau = sphere.tau
    parallel = second_variation_fd(sphere, "parallel", h=5e-3)
    worst = abs(parallel + 2.0 * np.pi**2) / (2.0 * np.pi**2)
    profiles = [
        (lambda s: np.cos(tau * s), lambda s: -tau * np.sin(tau * s)),
        (lambda s: np.cos(2.0 * tau * s),
         lambda s: -2.0 * tau * np.sin(2.0 * tau * s)),
        (lambda s: 1.0 + 0.5 * np.sin(tau * s) ** 2,
         lambda s: tau * np.sin(tau * s) * np.cos(tau * s)),
    ]
    for g, dg in profiles:
        fd = second_variation_fd(sphere, "vertical", u_vert=(g, dg), h=1.5e-3)
        quad = index_form(sphere, RadialVertical(tau, g, dg))
        worst = max(worst, abs(fd - quad) / abs(quad))
    _verdict("AC13 FD second variation vs index form", worst < 1e-3,
             f"max rel diff {worst:.3e} (parallel + 3 vertical profiles)")


def test_ac14_divergence_terms_vanish(sphere_cache):
    sphere = sphere_cache(1.0, 0.0, 48, 512)
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(10):
        u = TestFunction.random((4, 4), rng).with_pole_constancy()
        div1, div2, div3 = divergence_integrals(sphere, u)
        worst = max(worst, abs(div1), abs(div2), abs(div3))
    _verdict("AC14 divergence integrals vanish", worst < 1e-6,
             f"max |integral| {worst:.3e} over 10 random u")


def test_ac15_isoperimetric_crossings():
    v_low, v_high = scan_interval()
    err_low = abs(v_low - 27.0 * np.pi**2 / 8.0)
    err_high = abs(v_high - 6.0 * np.pi**2)
    winner = compare_at_volume(4.0 * np.pi**2).winner
    ok = err_low < 1e-6 and err_high < 1e-6 and winner == "torus"
    _verdict("AC15 isoperimetric crossings", ok,
             f"v_low err {err_low:.3e}, v_high err {err_high:.3e}, "
             f"winner at 4 pi^2: {winner}")


def test_ac16_hyperbolic_profile(sphere_cache):
    lam = 2.0
    f = hyperbolic_profile(lam)
    root_defect = abs(f(1.0 / lam))
    sphere = sphere_cache(lam, -1.0)
    half = sphere.n_s // 2
    meridian = sphere.points[0, : half + 1]
    radius = np.hypot(meridian[:, 0], meridian[:, 1])
    graph_defect = float(np.max(np.abs(
        (meridian[:, 2] - meridian[-1, 2]) - f(radius))))
    ok = root_defect < 1e-12 and graph_defect < 1e-5
    _verdict("AC16 hyperbolic profile correspondence", ok,
             f"f(1/lam) = {root_defect:.3e}, "
             f"meridian graph defect {graph_defect:.3e}")
