"""M1 closure algebra and the coefficient laws of the damped p-system.

The Lagrangian system handled throughout the package is

    v_t - u_x = 0,
    u_t + p(v)_x = -alpha * u + (g(u) f(v))_x,

and a :class:`ModelSpec` bundles ``p``, ``g``, ``f``, their derivatives and
the damping ``alpha``.  All scalar laws accept floats or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, VacuumError

# physical bound on the normalized flux; the closure formula itself stays
# real up to |u| = 2/sqrt(3)
U_MAX = 1.0


def _check_flux(u, bound=U_MAX):
    u = np.asarray(u, dtype=float)
    # a single reduction; NaN makes the comparison fail as well
    if u.size and not np.max(np.abs(u)) <= bound:
        raise DomainError(f"normalized flux outside [-{bound}, {bound}]")
    return u


def _check_volume(v):
    v = np.asarray(v, dtype=float)
    if v.size and not (np.min(v) > 0.0 and np.max(v) < np.inf):
        raise VacuumError("specific volume must be strictly positive")
    return v


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def eddington_chi(u):
    """Eddington factor ``(3 + 4u^2) / (5 + 2 sqrt(4 - 3u^2))`` for ``|u| <= 1``."""
    u = _check_flux(u)
    u2 = u * u
    return _out((3.0 + 4.0 * u2) / (5.0 + 2.0 * np.sqrt(4.0 - 3.0 * u2)))


def radiative_pressure_1d(rho, u):
    """One-dimensional radiative pressure ``chi(u) * rho``.

    In 1D the projector ``u (x) u / |u|^2`` equals one, so the pressure tensor
    collapses to the scalar ``chi * rho``, which is smooth through ``u = 0``.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise DomainError("radiative energy must be non-negative")
    return _out(np.asarray(eddington_chi(u)) * rho)


def closure_identity_residual(rho, u):
    """``|chi(u) rho - (rho/3 + 2 rho u^2 / (2 + sqrt(4 - 3u^2)))|``.

    The two expressions are algebraically equal; the value measures rounding.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise DomainError("radiative energy must be non-negative")
    u = _check_flux(u)
    s = np.sqrt(4.0 - 3.0 * u * u)
    conservative = rho / 3.0 + 2.0 * rho * u * u / (2.0 + s)
    return _out(np.abs(np.asarray(radiative_pressure_1d(rho, u)) - conservative))


def m1_g(u):
    u = _check_flux(u)
    s = np.sqrt(4.0 - 3.0 * u * u)
    return _out(u * u * s / (2.0 + s))


def m1_g_deriv(u):
    u = _check_flux(u)
    u2 = u * u
    s = np.sqrt(4.0 - 3.0 * u2)
    q = 1.0 / (2.0 + s)
    # d/du [s / (2 + s)] = -6u / (s (2 + s)^2)
    return _out(u * q * (2.0 * s - 6.0 * u2 * q / s))


def m1_f(v):
    v = _check_volume(v)
    return _out(1.0 / v)


def m1_f_deriv(v):
    v = _check_volume(v)
    return _out(-1.0 / (v * v))


def m1_p(v):
    v = _check_volume(v)
    return _out(1.0 / (3.0 * v))


def m1_p_deriv(v):
    v = _check_volume(v)
    return _out(-1.0 / (3.0 * v * v))


def _zero(x):
    return _out(np.zeros_like(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class ModelSpec:
    """Coefficient laws of the damped system.

    ``admissible_u`` is the closed interval of valid velocities; the solver
    aborts when a state leaves it.  Construction validates ``p' < 0`` on a
    sample of volumes and ``g(0) = g'(0) = 0``.
    """

    pressure: Callable
    pressure_deriv: Callable
    alpha: float
    flux_g: Callable = _zero
    flux_g_deriv: Callable = _zero
    flux_f: Callable = _zero
    flux_f_deriv: Callable = _zero
    admissible_u: tuple[float, float] = (-np.inf, np.inf)
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise DomainError("damping alpha must be positive")
        lo, hi = self.admissible_u
        if not lo < 0.0 < hi:
            raise DomainError("admissible velocity interval must contain 0")
        vs = np.geomspace(0.1, 10.0, 64)
        if np.any(np.asarray(self.pressure_deriv(vs)) >= 0.0):
            raise DomainError("pressure law must satisfy p'(v) < 0")
        if abs(float(self.flux_g(0.0))) > 1e-12 or abs(float(self.flux_g_deriv(0.0))) > 1e-12:
            raise DomainError("flux factor must satisfy g(0) = g'(0) = 0")

    @property
    def has_flux_coupling(self) -> bool:
        return self.flux_g is not _zero

    def check_velocity(self, u):
        lo, hi = self.admissible_u
        u = np.asarray(u)
        return bool(np.all((u >= lo) & (u <= hi)))


def m1_model(alpha: float = 1.0) -> ModelSpec:
    """The M1 radiative model in Lagrangian form, with ``alpha = sigma``."""
    return ModelSpec(
        pressure=m1_p,
        pressure_deriv=m1_p_deriv,
        alpha=float(alpha),
        flux_g=m1_g,
        flux_g_deriv=m1_g_deriv,
        flux_f=m1_f,
        flux_f_deriv=m1_f_deriv,
        admissible_u=(-U_MAX, U_MAX),
        name="m1",
        params={"alpha": float(alpha)},
    )


def gamma_law_model(gamma: float, alpha: float = 1.0, flux_g=None, flux_g_deriv=None,
                    flux_f=None, flux_f_deriv=None) -> ModelSpec:
    """Damped p-system with ``p(v) = v**-gamma``.

    Without flux factors this is the damped compressible Euler system; user
    supplied ``g``/``f`` pairs are validated like any other model.
    """
    if not gamma > 0.0:
        raise DomainError("gamma must be positive")
    gamma = float(gamma)

    def pressure(v):
        return _out(_check_volume(v) ** -gamma)

    def pressure_deriv(v):
        return _out(-gamma * _check_volume(v) ** (-gamma - 1.0))

    kw = {}
    if flux_g is not None:
        if flux_g_deriv is None or flux_f is None or flux_f_deriv is None:
            raise DomainError("flux coupling needs g, g', f and f'")
        kw = dict(flux_g=flux_g, flux_g_deriv=flux_g_deriv, flux_f=flux_f,
                  flux_f_deriv=flux_f_deriv)
    return ModelSpec(pressure=pressure, pressure_deriv=pressure_deriv, alpha=float(alpha),
                     name="gamma-law", params={"gamma": gamma, "alpha": float(alpha)}, **kw)


def model_from_name(name: str, **params) -> ModelSpec:
    """Look up a model by its config name (``"m1"`` or ``"gamma-law"``)."""
    key = name.strip().lower()
    if key == "m1":
        return m1_model(params.get("alpha", 1.0))
    if key in ("gamma-law", "gamma_law", "gamma"):
        return gamma_law_model(params.get("gamma", 1.4), params.get("alpha", 1.0))
    raise DomainError(f"unknown model {name!r}")
