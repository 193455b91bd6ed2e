"""Closed-form candidate comparison in the cylinder quotient."""

from __future__ import annotations

import numpy as np
import pytest

from srforms.isoperimetry import (V_SPHERE_MAX, compare_at_volume,
                                  profile_table, scan_interval,
                                  sphere_area_at_volume, sphere_for_volume,
                                  sphere_profile, torus_area_at_volume,
                                  torus_for_volume, torus_profile)

PI2 = np.pi**2


def test_sphere_profile_values():
    one = sphere_profile(1.0)
    assert one.area == pytest.approx(PI2, abs=1e-14)
    assert one.volume == pytest.approx(3.0 * PI2 / 8.0, abs=1e-14)
    two = sphere_profile(2.0)
    assert two.area == pytest.approx(PI2 / 8.0, abs=1e-14)
    assert two.volume == pytest.approx(3.0 * PI2 / 128.0, abs=1e-14)


def test_torus_profile_values():
    unit = torus_profile(1.0)
    assert unit.area == pytest.approx(4.0 * PI2, abs=1e-13)
    assert unit.volume == pytest.approx(2.0 * PI2, abs=1e-13)
    half = torus_profile(0.5)
    assert half.area == pytest.approx(2.0 * PI2, abs=1e-13)
    assert half.volume == pytest.approx(PI2 / 2.0, abs=1e-13)


def test_guards():
    with pytest.raises(ValueError):
        sphere_profile(0.5)
    with pytest.raises(ValueError):
        torus_profile(0.0)
    with pytest.raises(ValueError):
        sphere_for_volume(V_SPHERE_MAX)
    with pytest.raises(ValueError):
        sphere_for_volume(0.0)
    with pytest.raises(ValueError):
        torus_for_volume(-1.0)
    with pytest.raises(ValueError):
        compare_at_volume(7.0 * PI2)
    with pytest.raises(ValueError):
        scan_interval(resolution=999)


def test_for_volume_inverts_profiles():
    for lam in (0.75, 1.0, 2.0):
        prof = sphere_profile(lam)
        back = sphere_for_volume(prof.volume)
        assert back.parameter == pytest.approx(lam, rel=1e-14)
        assert back.area == pytest.approx(prof.area, rel=1e-14)
    for radius in (0.3, 1.0, 2.5):
        prof = torus_profile(radius)
        back = torus_for_volume(prof.volume)
        assert back.parameter == pytest.approx(radius, rel=1e-14)


def test_area_curves_match_profiles():
    for lam in (0.75, 1.0, 2.0):
        prof = sphere_profile(lam)
        assert sphere_area_at_volume(prof.volume) == pytest.approx(
            prof.area, rel=1e-13)
    for radius in (0.3, 1.0, 2.5):
        prof = torus_profile(radius)
        assert torus_area_at_volume(prof.volume) == pytest.approx(
            prof.area, rel=1e-13)


def test_compare_at_volume():
    mid = compare_at_volume(4.0 * PI2)
    assert mid.winner == "torus"
    assert mid.torus_area < mid.sphere_area
    low = compare_at_volume(2.0 * PI2)
    assert low.winner == "sphere"
    assert low.sphere_area < low.torus_area


def test_scan_interval_crossings():
    v_low, v_high = scan_interval()
    assert abs(v_low - 27.0 * PI2 / 8.0) < 1e-6
    assert abs(v_high - 6.0 * PI2) < 1e-6
    # the crossing volume is where the closed-form curves intersect:
    # sqrt(pi) (8/3)^(3/4) v^(3/4) = 2 sqrt(2) pi sqrt(v)
    assert sphere_area_at_volume(v_low) == pytest.approx(
        torus_area_at_volume(v_low), rel=1e-12)
    # just inside the window the torus wins, just outside the sphere does
    assert compare_at_volume(v_low * 1.01).winner == "torus"
    assert compare_at_volume(v_low * 0.99).winner == "sphere"


def test_profile_table():
    rows = profile_table([2.0 * PI2, 4.0 * PI2, 7.0 * PI2])
    assert [r["winner"] for r in rows] == ["sphere", "torus", "torus"]
    assert np.isnan(rows[2]["sphere_area"])
    assert rows[2]["torus_area"] == pytest.approx(
        torus_for_volume(7.0 * PI2).area)
    assert rows[0]["sphere_area"] < rows[0]["torus_area"]
