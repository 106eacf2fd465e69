"""Cell-centred discretization of the truncated half-line ``[0, L]``.

Fields are plain 1-D numpy arrays with one value per cell; the helpers here
take the grid spacing explicitly so they work equally on solver states and
on derived perturbation fields.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import AdmissibilityError, DomainError, TailWarning, VacuumError

MIN_CELLS = 8


@dataclass(frozen=True)
class HalfLineGrid:
    length: float
    cells: int

    def __post_init__(self):
        if not self.length > 0.0:
            raise DomainError("grid length must be positive")
        if int(self.cells) != self.cells or self.cells < MIN_CELLS:
            raise DomainError(f"grid needs an integer number of cells >= {MIN_CELLS}")

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @cached_property
    def x(self) -> np.ndarray:
        x = (np.arange(self.cells) + 0.5) * self.dx
        x.setflags(write=False)
        return x

    def field(self, values) -> np.ndarray:
        """Validate ``values`` as a field on this grid and freeze it."""
        arr = np.array(values, dtype=float)
        if arr.shape != (self.cells,):
            raise DomainError(f"field has shape {arr.shape}, grid has {self.cells} cells")
        if not np.all(np.isfinite(arr)):
            raise DomainError("field values must be finite")
        arr.setflags(write=False)
        return arr

    def sample(self, func) -> np.ndarray:
        return self.field(func(np.asarray(self.x)))


@dataclass(frozen=True)
class StateField:
    """Specific volume ``v`` and velocity ``u`` on a grid."""

    v: np.ndarray
    u: np.ndarray

    def validate(self, model=None):
        if self.v.shape != self.u.shape:
            raise DomainError("v and u must live on the same grid")
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.u))):
            raise DomainError("state contains non-finite values")
        if np.any(self.v <= 0.0):
            raise VacuumError("specific volume must stay positive")
        if model is not None and not model.check_velocity(self.u):
            raise AdmissibilityError(f"velocity left admissible interval {model.admissible_u}")
        return self


def _edge_derivative(f, dx, rule, side):
    """One-sided derivative at the first (side=0) or last (side=-1) cell."""
    if side == 0:
        f0, f1, f2 = f[0], f[1], f[2]
        if rule == "even":
            return 0.5 * (f1 - f0) / dx
        if rule == "odd":
            return 0.5 * (f1 + f0) / dx
        if rule == "extrapolate":
            return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * dx)
        c = float(rule)
        # quadratic through face value at -dx/2 and the first two centres
        return (-4.0 * c / 3.0 + f0 + f1 / 3.0) / dx
    fn, fm, fl = f[-1], f[-2], f[-3]
    if rule == "even":
        return 0.5 * (fn - fm) / dx
    if rule == "odd":
        return -0.5 * (fn + fm) / dx
    if rule == "extrapolate":
        return (3.0 * fn - 4.0 * fm + fl) / (2.0 * dx)
    c = float(rule)
    return (4.0 * c / 3.0 - fn - fm / 3.0) / dx


def ddx(f, dx, left="extrapolate", right="extrapolate"):
    """Second-order derivative of a cell field.

    Interior cells use central differences.  Each end follows its boundary
    rule: ``"even"``/``"odd"`` mirror the field through the face,
    ``"extrapolate"`` uses a one-sided three-point stencil and a number is
    taken as the Dirichlet value of the field on the boundary face.
    """
    f = np.asarray(f, dtype=float)
    if f.size < 4:
        raise DomainError("ddx needs at least 4 cells")
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    out[0] = _edge_derivative(f, dx, left, 0)
    out[-1] = _edge_derivative(f, dx, right, -1)
    return out


def integrate(f, dx) -> float:
    """Composite midpoint quadrature over ``[0, L]``."""
    return float(np.sum(f) * dx)


def _tail_flag(f, tail_tol):
    f = np.asarray(f, dtype=float)
    scale = np.max(np.abs(f)) if f.size else 0.0
    tol = 1e-8 * scale if tail_tol is None else tail_tol
    if abs(f[-1]) > tol:
        warnings.warn(f"field is {abs(f[-1]):.3e} at the truncation point", TailWarning,
                      stacklevel=3)
        return True
    return False


def tail_integral(f, dx, tail_tol=None) -> np.ndarray:
    """``int_{x_j}^L f`` at every cell centre, assuming ``f`` vanishes beyond L."""
    f = np.asarray(f, dtype=float)
    _tail_flag(f, tail_tol)
    # midpoint sum over the cells to the right plus half of the own cell
    right = np.concatenate([np.cumsum(f[::-1])[::-1][1:], [0.0]])
    return (right + 0.5 * f) * dx


def cumulative_integral(f, dx) -> np.ndarray:
    """``int_0^{x_j} f`` at every cell centre."""
    f = np.asarray(f, dtype=float)
    left = np.concatenate([[0.0], np.cumsum(f)[:-1]])
    return (left + 0.5 * f) * dx


def integrate_tail(f, dx, x0, tail_tol=None) -> float:
    """``int_{x0}^L f`` for a single lower limit."""
    f = np.asarray(f, dtype=float)
    x = (np.arange(f.size) + 0.5) * dx
    tails = tail_integral(f, dx, tail_tol)
    xs = np.concatenate([[0.0], x, [f.size * dx]])
    ts = np.concatenate([[integrate(f, dx)], tails, [0.0]])
    return float(np.interp(x0, xs, ts))


def norms(f, dx) -> dict:
    f = np.abs(np.asarray(f, dtype=float))
    return {
        "L1": float(np.sum(f) * dx),
        "L2": float(np.sqrt(np.sum(f * f) * dx)),
        "Linf": float(np.max(f)) if f.size else 0.0,
    }


def lp_norm(f, dx, p) -> float:
    f = np.abs(np.asarray(f, dtype=float))
    if p == np.inf or p == "inf":
        return float(np.max(f))
    p = float(p)
    return float((np.sum(f**p) * dx) ** (1.0 / p))


def write_columns_csv(path, columns: dict):
    """Write equally long columns as CSV with 17 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*data):
            w.writerow([format(float(v), ".17g") for v in row])


def write_field_csv(path, x, values):
    write_columns_csv(path, {"x": x, "value": values})


def read_columns_csv(path) -> dict:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    arr = np.array(rows).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}
