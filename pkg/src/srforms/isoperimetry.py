"""Sphere-vs-torus isoperimetric comparison in the flat Sasakian cylinder.

The flat model, quotiented by a vertical period of ``2 pi``, carries two
closed-form candidate families: the candidate spheres (area ``pi**2 /
lam**3``, volume ``3 pi**2 / (8 lam**4)``, embedded in the quotient iff
``lam > 1/2`` since the sphere's vertical height is ``pi / (2 lam**2)``)
and the vertical tori over plane circles (area ``4 pi**2 R``, volume
``2 pi**2 R**2``).  Expressed at equal volume the sphere's area is
``sqrt(pi) (8/3)**(3/4) v**(3/4)`` and the torus's ``2 sqrt(2) pi
sqrt(v)``, so the torus wins on exactly the volume window between the
single crossing of the two curves and the volume at which the sphere
family ceases to embed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect, brentq

__all__ = [
    "CandidateProfile",
    "ComparisonReport",
    "V_SPHERE_MAX",
    "sphere_profile",
    "torus_profile",
    "sphere_for_volume",
    "torus_for_volume",
    "sphere_area_at_volume",
    "torus_area_at_volume",
    "compare_at_volume",
    "scan_interval",
    "profile_table",
]

PI2 = math.pi * math.pi

#: Largest volume the embedded sphere family reaches (at ``lam = 1/2``).
V_SPHERE_MAX = 6.0 * PI2


@dataclass(frozen=True)
class CandidateProfile:
    """One closed-form isoperimetric candidate.

    ``family`` is ``"pansu_sphere"`` or ``"cylinder_torus"``; ``parameter``
    is the family parameter (the curvature ``lam`` of the sphere, the plane
    radius ``R`` of the torus).
    """

    family: str
    parameter: float
    area: float
    volume: float


@dataclass(frozen=True)
class ComparisonReport:
    """Equal-volume comparison of the two candidate families."""

    volume: float
    winner: str
    sphere_area: float
    torus_area: float


def sphere_profile(lam: float) -> CandidateProfile:
    """Closed-form area/volume of the candidate sphere of curvature ``lam``.

    Requires ``lam > 1/2``: the sphere's vertical height ``pi/(2 lam**2)``
    must be smaller than the cylinder's vertical period ``2 pi`` for the
    sphere to embed in the quotient.
    """
    if not lam > 0.5:
        raise ValueError(
            f"sphere family needs lam > 1/2 to embed in the cylinder, got {lam}")
    return CandidateProfile(
        family="pansu_sphere",
        parameter=float(lam),
        area=PI2 / lam**3,
        volume=3.0 * PI2 / (8.0 * lam**4),
    )


def torus_profile(radius: float) -> CandidateProfile:
    """Closed-form area/volume of the vertical torus over a circle of the
    given plane radius."""
    if not radius > 0.0:
        raise ValueError(f"torus radius must be positive, got {radius}")
    return CandidateProfile(
        family="cylinder_torus",
        parameter=float(radius),
        area=4.0 * PI2 * radius,
        volume=2.0 * PI2 * radius**2,
    )


def sphere_for_volume(volume: float) -> CandidateProfile:
    """The sphere candidate enclosing the given volume
    (``lam = (3 pi**2 / (8 v))**(1/4)``; needs ``volume < V_SPHERE_MAX``)."""
    if not 0.0 < volume < V_SPHERE_MAX:
        raise ValueError(
            f"no embedded sphere of volume {volume}; family covers "
            f"(0, {V_SPHERE_MAX})")
    lam = (3.0 * PI2 / (8.0 * volume)) ** 0.25
    return sphere_profile(lam)


def torus_for_volume(volume: float) -> CandidateProfile:
    """The torus candidate enclosing the given volume
    (``R = sqrt(v / (2 pi**2))``)."""
    if not volume > 0.0:
        raise ValueError(f"volume must be positive, got {volume}")
    return torus_profile(math.sqrt(volume / (2.0 * PI2)))


def sphere_area_at_volume(volume) -> np.ndarray | float:
    """Sphere-family area as a function of enclosed volume (vectorized;
    no embeddedness guard - use for the closed-form curve only)."""
    return math.sqrt(math.pi) * (8.0 / 3.0) ** 0.75 * np.asarray(volume) ** 0.75


def torus_area_at_volume(volume) -> np.ndarray | float:
    """Torus-family area as a function of enclosed volume (vectorized)."""
    return 2.0 * math.sqrt(2.0) * math.pi * np.sqrt(np.asarray(volume))


def compare_at_volume(volume: float) -> ComparisonReport:
    """Compare the two candidates at equal volume.

    The volume must lie in the sphere family's range ``(0, 6 pi**2)`` so
    both candidates exist; the winner is the family of smaller area.
    """
    sphere = sphere_for_volume(volume)
    torus = torus_for_volume(volume)
    winner = "torus" if torus.area < sphere.area else "sphere"
    return ComparisonReport(volume=float(volume), winner=winner,
                            sphere_area=sphere.area, torus_area=torus.area)


def _difference(volume: float) -> float:
    return float(sphere_area_at_volume(volume) - torus_area_at_volume(volume))


def scan_interval(resolution: int = 4096) -> tuple[float, float]:
    """Locate the torus-favourable volume window ``(v_low, v_high)``.

    A dense scan over ``(pi**2, 10 pi**2)`` (``resolution >= 1000`` points)
    brackets the two transitions of the comparison status: the single
    crossing of the closed-form area curves (refined with Brent's method)
    and the embeddedness boundary of the sphere family (refined by
    bisection on ``lam(v) - 1/2``).  Between them the torus encloses the
    same volume with strictly less area; past ``v_high`` the sphere family
    has left the competition entirely.
    """
    if resolution < 1000:
        raise ValueError(f"resolution must be at least 1000, got {resolution}")
    grid = np.linspace(PI2, 10.0 * PI2, int(resolution))
    in_range = grid < V_SPHERE_MAX
    diff = sphere_area_at_volume(grid) - torus_area_at_volume(grid)
    status = np.where(~in_range, 2, np.where(diff > 0.0, 1, 0))
    changes = np.nonzero(np.diff(status))[0]
    if len(changes) != 2:
        raise RuntimeError(
            f"expected exactly two comparison transitions, found {len(changes)}")

    i0, i1 = changes
    v_low = brentq(_difference, grid[i0], grid[i0 + 1], xtol=1e-12, rtol=1e-15)

    def lam_defect(volume: float) -> float:
        return (3.0 * PI2 / (8.0 * volume)) ** 0.25 - 0.5

    v_high = bisect(lam_defect, grid[i1], grid[i1 + 1], xtol=1e-10)
    return float(v_low), float(v_high)


def profile_table(volumes) -> list[dict]:
    """Rows (volume, sphere_area, torus_area, winner) for a volume list.

    Volumes outside the sphere family's range get ``sphere_area = nan`` and
    winner ``"torus"`` (the only candidate left).
    """
    rows = []
    for v in np.asarray(volumes, dtype=float):
        torus = torus_for_volume(float(v))
        if 0.0 < v < V_SPHERE_MAX:
            report = compare_at_volume(float(v))
            rows.append({"volume": float(v), "sphere_area": report.sphere_area,
                         "torus_area": report.torus_area,
                         "winner": report.winner})
        else:
            rows.append({"volume": float(v), "sphere_area": float("nan"),
                         "torus_area": torus.area, "winner": "torus"})
    return rows
