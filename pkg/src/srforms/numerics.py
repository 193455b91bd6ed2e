"""Shared numerical kernels.

Fixed-step RK4 drivers (vectorized over a batch of states), cached
Gauss-Legendre rules, fourth-order finite-difference stencils on uniform
grids, and an atomic text writer used by every file-producing entry point.
"""

from __future__ import annotations

from functools import lru_cache
import os
import tempfile
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for an autonomous system."""
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_span(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    length: float,
    max_step: float,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Integrate an autonomous system over ``[0, length]`` with fixed steps.

    The step count is ``ceil(length / max_step)`` so the actual step never
    exceeds ``max_step``.  ``project`` (if given) is applied after every step;
    it is used for constraint renormalization (unit speed, horizontality,
    staying on an embedded submanifold).
    """
    if length == 0.0:
        return np.array(y0, dtype=float, copy=True)
    n = max(1, int(np.ceil(abs(length) / max_step)))
    h = length / n
    y = np.array(y0, dtype=float, copy=True)
    for _ in range(n):
        y = rk4_step(rhs, y, h)
        if project is not None:
            y = project(y)
    return y


def rk4_sampled(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    s_values: np.ndarray,
    max_step: float,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Integrate and record the state at each of the increasing ``s_values``.

    ``s_values[0]`` must be 0.  Returns an array of shape
    ``(len(s_values),) + y0.shape``.
    """
    s_values = np.asarray(s_values, dtype=float)
    if s_values[0] != 0.0:
        raise ValueError("sample values must start at 0")
    out = np.empty((len(s_values),) + np.shape(y0), dtype=float)
    y = np.array(y0, dtype=float, copy=True)
    out[0] = y
    for i in range(1, len(s_values)):
        seg = s_values[i] - s_values[i - 1]
        y = rk4_span(rhs, y, seg, max_step, project=project)
        out[i] = y
    return out


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return np.asarray(x, dtype=float), np.asarray(w, dtype=float)


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def periodic_trapezoid(n: int, period: float = 2.0 * np.pi) -> tuple[np.ndarray, np.ndarray]:
    """Equispaced nodes and weights for a periodic integrand on one period.

    The trapezoid rule is spectrally accurate for smooth periodic functions,
    which is what every angular integral here is.
    """
    nodes = np.arange(n) * (period / n)
    weights = np.full(n, period / n)
    return nodes, weights


# Fourth-order finite differences on a uniform grid.  The one-sided stencils
# at the two edge layers keep the global order at 4.

_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def deriv1_uniform(values: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Fourth-order first derivative along ``axis`` of a uniform-grid array."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = v.shape[0]
    if n < 5:
        raise ValueError("need at least 5 samples for the 4th-order stencil")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    for out_i, stencil, flip in ((0, _EDGE0, False), (1, _EDGE1, False),
                                 (n - 1, _EDGE0, True), (n - 2, _EDGE1, True)):
        idx = np.arange(5)
        if flip:
            idx = n - 1 - idx
        d[out_i] = np.tensordot(stencil if not flip else -stencil, v[idx], axes=(0, 0)) / h
    return np.moveaxis(d, 0, axis)


def deriv1_periodic(values: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Fourth-order first derivative along a periodic ``axis``.

    The grid must cover exactly one period *without* a duplicated seam point.
    """
    v = np.asarray(values, dtype=float)
    vm1 = np.roll(v, 1, axis=axis)
    vm2 = np.roll(v, 2, axis=axis)
    vp1 = np.roll(v, -1, axis=axis)
    vp2 = np.roll(v, -2, axis=axis)
    return (vm2 - 8.0 * vm1 + 8.0 * vp1 - vp2) / (12.0 * h)


def fd_second_derivative(f: Callable[[float], float], x0: float, h: float) -> float:
    """Fourth-order central second derivative of a scalar callable."""
    fm2, fm1, f0, fp1, fp2 = (f(x0 - 2 * h), f(x0 - h), f(x0), f(x0 + h), f(x0 + 2 * h))
    return (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)


def richardson_second_diff(values_h: Sequence[float], values_h2: Sequence[float], h: float) -> float:
    """Richardson-extrapolated second difference.

    ``values_h`` holds ``f(-h), f(0), f(h)`` and ``values_h2`` holds
    ``f(-h/2), f(0), f(h/2)``; combining the two second differences cancels
    the leading O(h^2) error of each.
    """
    d_h = (values_h[0] - 2.0 * values_h[1] + values_h[2]) / (h * h)
    d_h2 = (values_h2[0] - 2.0 * values_h2[1] + values_h2[2]) / (0.25 * h * h)
    return (4.0 * d_h2 - d_h) / 3.0


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` atomically (temp file + rename), LF endings."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
