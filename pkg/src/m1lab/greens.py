"""Heat kernel of the linearized problem on the half-line.

Around ``v_plus`` the antiderivative perturbation solves, to leading order,

    alpha V_t + p'(v_plus) V_xx = -V_tt + F1 + F2 + [(p'(v_plus) - p'(vbar)) V_x]_x,

a heat equation with diffusivity ``D = -p'(v_plus) / alpha`` and ``V = 0`` at
the wall.  Its Green's function comes from the method of images.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, eval_hermite

from .closure import ModelSpec
from .decay import DecayFit, fit_exponent, series_name
from .errors import DomainError
from .grid import HalfLineGrid, ddx, lp_norm
from .perturbation import PerturbationSnapshot
from .profiles import ProfileBundle


def diffusivity(model: ModelSpec, v_plus) -> float:
    return -float(model.pressure_deriv(v_plus)) / model.alpha


@dataclass(frozen=True)
class HeatKernel:
    D: float

    def __post_init__(self):
        if not self.D > 0.0:
            raise DomainError("diffusivity must be positive")

    def __call__(self, x, t, y):
        return kernel(x, t, y, self.D)


def kernel(x, t, y, D=1.0):
    """``(4 pi D t)^(-1/2) [exp(-(x-y)^2 / 4Dt) - exp(-(x+y)^2 / 4Dt)]``."""
    if not np.all(np.asarray(t) > 0.0):
        raise DomainError("kernel needs t > 0")
    if not D > 0.0:
        raise DomainError("diffusivity must be positive")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    four_dt = 4.0 * D * np.asarray(t, dtype=float)
    out = (np.exp(-((x - y) ** 2) / four_dt) - np.exp(-((x + y) ** 2) / four_dt))
    out = out / np.sqrt(np.pi * four_dt)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_derivative(x, t, k=0, j=0, D=1.0):
    """``d_x^k d_t^j`` of the whole-line heat kernel ``(4 pi D t)^(-1/2) e^(-x^2/4Dt)``.

    Uses ``d_t = D d_xx`` and ``d^n/dxi^n e^(-xi^2) = (-1)^n H_n(xi) e^(-xi^2)``.
    """
    if t <= 0.0:
        raise DomainError("kernel needs t > 0")
    n = k + 2 * j
    scale = np.sqrt(4.0 * D * t)
    xi = np.asarray(x, dtype=float) / scale
    base = np.exp(-xi * xi) / np.sqrt(np.pi) / scale
    return D**j * (-1.0) ** n * scale ** (-n) * eval_hermite(n, xi) * base


def kernel_norm_scaling(k, j, p, times, D=1.0, points_per_width=40, widths=12.0) -> DecayFit:
    """Fit the decay exponent of ``|| d_x^k d_t^j G(t) ||_{L^p(0, inf)}``.

    The Gaussian is centred at the wall, so the half-line norm is the
    whole-line norm times ``2^(-1/p)``; only the constant changes.  All times
    share one physical grid, which resolves the narrowest kernel with
    ``points_per_width`` cells and covers ``widths`` widths of the broadest.
    """
    if k < 0 or j < 0 or k + j > 2:
        raise DomainError("kernel scaling supports k + j <= 2")
    times = np.asarray(times, dtype=float)
    if times.size < 8 or times[0] <= 0.0 or times[-1] / times[0] < 100.0:
        raise DomainError("kernel scaling needs >= 8 positive times spanning two decades")
    dx = np.sqrt(4.0 * D * times[0]) / points_per_width
    n = int(np.ceil(widths * np.sqrt(4.0 * D * times[-1]) / dx))
    x = (np.arange(n) + 0.5) * dx
    vals = np.array([lp_norm(gaussian_derivative(x, t, k, j, D), dx, p) for t in times])
    expected = -0.5 * (1.0 - 1.0 / float(p)) - k / 2.0 - j + 0.0  # no negative zero
    norm = "Linf" if p == np.inf else f"L{int(p)}"
    return fit_exponent(times, vals, window=(times[0], times[-1]), offset=0.0,
                        quantity=series_name("G", k, j, norm), expected=expected, tolerance=0.02, k=k, j=j, norm=norm)


KERNEL_CASES = ((0, 0, 2), (1, 0, 1), (0, 1, 1), (0, 0, np.inf), (0, 0, 1), (1, 0, 2),
                (2, 0, 2), (0, 1, 2), (1, 1, 1))


def kernel_scaling_report(times=None, D=1.0, cases=KERNEL_CASES) -> list:
    times = np.geomspace(1.0, 1e3, 25) if times is None else times
    return [kernel_norm_scaling(k, j, p, times, D) for k, j, p in cases]


def write_kernel_report_csv(path, fits):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "j", "p", "expected", "fitted"])
        for f in fits:
            p = "inf" if f.norm == "Linf" else f.norm[1:]
            w.writerow([f.k, f.j, p, format(f.expected, ".17g"), format(f.exponent, ".17g")])


def compact_bump(grid: HalfLineGrid, center, half_width) -> np.ndarray:
    """Smooth bump ``exp(-1/(1 - s^2))`` supported on ``|x - center| < half_width``."""
    s = (np.asarray(grid.x) - center) / half_width
    out = np.zeros(grid.cells)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    if not out.any():
        raise DomainError("bump support is narrower than one cell")
    return out


def propagate_initial(data, grid: HalfLineGrid, t, D=1.0, chunk=512) -> np.ndarray:
    """``J1(x, t) = int_0^inf G(x, t; y) data(y) dy`` at the cell centres.

    Midpoint quadrature over the cells where ``data`` is non-zero; beyond
    ``L`` the data are taken constant at their last value and integrated
    exactly with ``erfc``.  ``t = 0`` returns a copy of the data.
    """
    data = np.asarray(data, dtype=float)
    if data.shape != (grid.cells,):
        raise DomainError("data must live on the grid")
    if t < 0.0:
        raise DomainError("propagation time must be non-negative")
    if t == 0.0:
        return data.copy()
    x = np.asarray(grid.x)
    out = np.zeros(grid.cells)
    cols = np.flatnonzero(data)
    for start in range(0, cols.size, chunk):
        c = cols[start:start + chunk]
        out += kernel(x[:, None], t, x[None, c], D) @ data[c] * grid.dx
    tail = data[-1]
    if tail != 0.0:
        s = np.sqrt(4.0 * D * t)
        L = grid.length
        out += 0.5 * tail * (erfc((L - x) / s) - erfc((L + x) / s))
    return out


def j1_decay(data, grid: HalfLineGrid, times, D=1.0, window=None, expected=-0.25,
             tolerance=0.02) -> DecayFit:
    """Fit the ``L^2`` decay exponent of the propagated initial data."""
    times = np.asarray(times, dtype=float)
    vals = np.array([lp_norm(propagate_initial(data, grid, t, D), grid.dx, 2) for t in times])
    win = (times[0], times[-1]) if window is None else window
    return fit_exponent(times, vals, window=win, offset=0.0, quantity="J1",
                        expected=expected, tolerance=tolerance)


def linearized_residual(snap: PerturbationSnapshot, bundle: ProfileBundle, model: ModelSpec,
                        v_plus, dx) -> np.ndarray:
    """``alpha V_t + p'(v_plus) V_xx + V_tt - F1 - F2 - [(p'(v_plus) - p'(vbar)) V_x]_x``.

    With ``alpha = 1`` this is the usual form; ``V_xx`` is taken from the
    snapshot's derivative field.
    """
    if snap.V_t is None or snap.V_tt is None:
        raise DomainError("attach time derivatives before evaluating the residual")
    dp_plus = float(model.pressure_deriv(v_plus))
    coef = dp_plus - np.asarray(model.pressure_deriv(bundle.vbar))
    corr = ddx(coef * snap.V_x, dx, left="even", right=0.0)
    return (model.alpha * snap.V_t + dp_plus * snap.V_xx + snap.V_tt
            - snap.F1 - snap.F2 - corr)
