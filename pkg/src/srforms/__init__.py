"""Sub-Riemannian geometry of the three-dimensional space forms.

The package models the one-parameter family of Sasakian sub-Riemannian
3-manifolds of constant Webster scalar curvature ``kappa``: the Heisenberg
group (``kappa = 0``), the universal cover of SL(2,R)-type geometry realized
on a disk bundle (``kappa < 0``), and the unit 3-sphere with its Hopf fibration
(``kappa > 0``).  On top of the models it provides Carnot-Caratheodory
geodesics, vertical Jacobi fields, the Pansu-type candidate spheres with their
area/volume, second-variation (stability) certificates, and the comparison of
isoperimetric candidates.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .space_forms import Frame, SpaceForm, make_space
from .geodesics import GeodesicPath, cut_length, shoot
from .jacobi import VerticalJacobi, tau4, tau_root
from .spheres import PansuSphere, area, build_sphere, enclosed_volume
from .stability import (StabilityReport, index_form, meanzero_scan,
                        second_variation_fd, wirtinger_scan)
from .isoperimetry import compare_at_volume, scan_interval

__all__ = [
    "Frame",
    "SpaceForm",
    "make_space",
    "GeodesicPath",
    "cut_length",
    "shoot",
    "VerticalJacobi",
    "tau4",
    "tau_root",
    "PansuSphere",
    "build_sphere",
    "area",
    "enclosed_volume",
    "StabilityReport",
    "index_form",
    "wirtinger_scan",
    "meanzero_scan",
    "second_variation_fd",
    "compare_at_volume",
    "scan_interval",
    "__version__",
]
