"""Time integration of the damped system on the truncated half-line.

Each step is Strang split: an exact half-step of the linear damping
``u <- u exp(-alpha dt / 2)``, a full step of the conservative part

    v_t + (-u)_x = 0,    u_t + (p(v) - g(u) f(v))_x = 0

with the semi-discrete Kurganov-Tadmor central flux (generalized minmod
reconstruction, Heun time stepping), and another damping half-step.  The
mass flux of the middle stage is scaled by :func:`damping_average`, so the
far-field inflow over a step is exact and the zero-mass identity holds to
rounding rather than to O(dt^2).

Ghost cells mirror ``v`` evenly and ``u`` oddly at the wall, which keeps the
mass flux through ``x = 0`` exactly zero.  At ``x = L`` they carry the far
field ``(v_plus, u_plus exp(-alpha t))``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .closure import ModelSpec
from .errors import AdmissibilityError, CFLError, DomainError, StepFailure, VacuumError
from .grid import HalfLineGrid, StateField, write_columns_csv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FarField:
    v_plus: float
    u_plus: float
    alpha: float

    def u_at(self, t):
        return self.u_plus * np.exp(-self.alpha * t)


def spectral_radius(v, u, model: ModelSpec):
    """Largest |eigenvalue| of the flux Jacobian ``[[0, -1], [p' - g f', -g' f]]``."""
    dp = np.asarray(model.pressure_deriv(v))
    if not model.has_flux_coupling:
        return np.sqrt(-dp)
    tr = -np.asarray(model.flux_g_deriv(u)) * np.asarray(model.flux_f(v))
    det = dp - np.asarray(model.flux_g(u)) * np.asarray(model.flux_f_deriv(v))
    root = np.sqrt(np.abs(tr * tr - 4.0 * det))
    return 0.5 * (np.abs(tr) + root)


def max_wave_speed(state: StateField, model: ModelSpec) -> float:
    if np.any(state.v <= 0.0):
        raise VacuumError("specific volume must stay positive")
    return float(np.max(spectral_radius(state.v, state.u, model)))


def _flux(v, u, model, kappa=1.0):
    fu = np.asarray(model.pressure(v))
    if model.has_flux_coupling:
        fu = fu - np.asarray(model.flux_g(u)) * np.asarray(model.flux_f(v))
    return -kappa * u, fu


def damping_average(alpha, dt) -> float:
    """``sinh(x) / x`` with ``x = alpha dt / 2``.

    Over a split step ``u`` decays like ``exp(-alpha s)``; the mass flux of the
    transport stage, evaluated at the mid-step velocity, is scaled by this
    factor so it carries the exact time average.  It is ``1 + O(dt^2)``.
    """
    x = 0.5 * alpha * dt
    return 1.0 if x == 0.0 else float(np.sinh(x) / x)


def _minmod3(a, b, c):
    s = np.sign(a)
    same = (s == np.sign(b)) & (s == np.sign(c))
    return np.where(same, s * np.minimum(np.minimum(np.abs(a), np.abs(b)), np.abs(c)), 0.0)


def _limited_slopes(q, theta):
    d = np.diff(q)
    back, fwd = d[:-1], d[1:]
    return _minmod3(theta * back, 0.5 * (back + fwd), theta * fwd)


def _with_ghosts(v, u, v_far, u_far):
    n = v.size
    ve = np.empty(n + 4)
    ue = np.empty(n + 4)
    ve[2:-2] = v
    ue[2:-2] = u
    ve[1], ve[0] = v[0], v[1]
    ue[1], ue[0] = -u[0], -u[1]
    ve[-2:] = v_far
    ue[-2:] = u_far
    return ve, ue


def kt_fluxes(v, u, model, v_far, u_far, theta=1.0, kappa=1.0):
    """Numerical fluxes ``(H_v, H_u)`` on the ``N + 1`` cell faces.

    ``kappa >= 1`` scales the mass flux; the local speed bound grows by
    ``sqrt(kappa)`` accordingly.
    """
    ve, ue = _with_ghosts(v, u, v_far, u_far)
    sv = _limited_slopes(ve, theta)  # slopes for extended cells 1 .. N+2
    su = _limited_slopes(ue, theta)
    # faces between extended cells i and i+1 for i = 1 .. N+1
    vm = ve[1:-2] + 0.5 * sv[:-1]
    vp = ve[2:-1] - 0.5 * sv[1:]
    um = ue[1:-2] + 0.5 * su[:-1]
    up = ue[2:-1] - 0.5 * su[1:]
    if np.any(vm <= 0.0) or np.any(vp <= 0.0):
        raise VacuumError("reconstructed specific volume is not positive")
    a = np.maximum(spectral_radius(vm, um, model), spectral_radius(vp, up, model))
    a = a * np.sqrt(kappa)
    fvm, fum = _flux(vm, um, model, kappa)
    fvp, fup = _flux(vp, up, model, kappa)
    hv = 0.5 * (fvm + fvp) - 0.5 * a * (vp - vm)
    hu = 0.5 * (fum + fup) - 0.5 * a * (up - um)
    return hv, hu


def _rate(v, u, model, dx, v_far, u_far, theta, kappa=1.0):
    hv, hu = kt_fluxes(v, u, model, v_far, u_far, theta, kappa)
    return -(hv[1:] - hv[:-1]) / dx, -(hu[1:] - hu[:-1]) / dx, hv[0], hv[-1]


def step(state: StateField, dt, t, model: ModelSpec, boundary: FarField, dx, cfl=1.0,
         theta=1.0, budget=None) -> StateField:
    """Advance ``state`` from ``t`` to ``t + dt``.

    ``budget``, when a one-element list, accumulates the time-integrated mass
    flux entering through the faces (positive = inflow).
    """
    v, u = state.v, state.u
    speed = max_wave_speed(state, model)
    if dt * speed > cfl * dx * (1.0 + 1e-12):
        raise CFLError(f"dt={dt:.3e} exceeds the Courant limit {cfl * dx / speed:.3e}")
    half = np.exp(-model.alpha * 0.5 * dt)
    u = u * half
    u_far = boundary.u_at(t + 0.5 * dt)
    kappa = damping_average(model.alpha, dt)
    rv, ru, w0, wn = _rate(v, u, model, dx, boundary.v_plus, u_far, theta, kappa)
    v1 = v + dt * rv
    u1 = u + dt * ru
    if np.any(v1 <= 0.0):
        raise VacuumError("specific volume lost positivity in the predictor")
    rv1, ru1, w01, wn1 = _rate(v1, u1, model, dx, boundary.v_plus, u_far, theta, kappa)
    v_new = v + 0.5 * dt * (rv + rv1)
    u_new = (u + 0.5 * dt * (ru + ru1)) * half
    if budget is not None:
        budget[0] += 0.5 * dt * ((w0 + w01) - (wn + wn1))
    return StateField(v_new, u_new).validate(model)


def auto_length(model: ModelSpec, v_plus, t_end, support, factor=10.0):
    """Truncation length ``factor * sqrt(D t_end) + support`` with ``D = -p'(v_plus)/alpha``."""
    diff = -float(model.pressure_deriv(v_plus)) / model.alpha
    return factor * np.sqrt(diff * t_end) + support


def geometric_times(t_end, per_decade=32, t_first=1.0, include_zero=True):
    """Snapshot times spaced evenly in ``log t`` from ``t_first`` to ``t_end``."""
    if t_end <= 0.0:
        return np.array([0.0])
    if t_end <= t_first:
        ts = np.array([t_end])
    else:
        n = int(np.ceil(per_decade * np.log10(t_end / t_first))) + 1
        ts = np.geomspace(t_first, t_end, n)
        ts[-1] = t_end
    return np.concatenate([[0.0], ts]) if include_zero else ts


@dataclass
class Scenario:
    model: ModelSpec
    grid: HalfLineGrid
    v0: np.ndarray
    u0: np.ndarray
    v_plus: float
    u_plus: float
    t_end: float
    cfl: float = 0.45
    snapshot_times: np.ndarray | None = None
    theta: float = 1.0
    tail_tol: float = 1e-8
    name: str = "scenario"

    def __post_init__(self):
        if self.snapshot_times is None:
            self.snapshot_times = geometric_times(self.t_end)
        self.snapshot_times = np.asarray(self.snapshot_times, dtype=float)

    @property
    def far_field(self) -> FarField:
        return FarField(self.v_plus, self.u_plus, self.model.alpha)

    def validate(self):
        if not 0.0 < self.cfl < 1.0:
            raise DomainError("Courant number must lie in (0, 1)")
        if self.t_end < 0.0:
            raise DomainError("t_end must be non-negative")
        ts = self.snapshot_times
        if ts.size and (np.any(np.diff(ts) <= 0.0) or ts[0] < 0.0 or ts[-1] > self.t_end):
            raise DomainError("snapshot times must increase within [0, t_end]")
        self.grid.field(self.v0)
        self.grid.field(self.u0)
        StateField(np.asarray(self.v0), np.asarray(self.u0)).validate(self.model)
        scale = max(1.0, abs(self.v_plus))
        if abs(self.v0[-1] - self.v_plus) > self.tail_tol * scale:
            raise DomainError("v0 does not reach v_plus at the truncation point")
        if abs(self.u0[-1] - self.u_plus) > self.tail_tol * max(1.0, abs(self.u_plus)):
            raise DomainError("u0 does not reach u_plus at the truncation point")
        return self


@dataclass
class Trajectory:
    scenario: Scenario
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diag_t: list = field(default_factory=list)
    diag_dt: list = field(default_factory=list)
    diag_mass: list = field(default_factory=list)
    diag_speed: list = field(default_factory=list)
    diag_budget: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        # row 0 of the diagnostics describes the initial state
        return len(self.diag_dt) - 1

    def snapshot(self, t):
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.times[i], self.states[i]

    def mass_drift(self) -> np.ndarray:
        """Mass change not explained by the boundary fluxes, per step."""
        m = np.asarray(self.diag_mass)
        return m - m[0] - np.asarray(self.diag_budget)

    def write_snapshots_csv(self, path):
        x = self.scenario.grid.x
        n = x.size
        write_columns_csv(path, {
            "t": np.repeat(self.times, n),
            "x": np.tile(x, len(self.times)),
            "v": np.concatenate([s.v for s in self.states]),
            "u": np.concatenate([s.u for s in self.states]),
        })

    def write_diagnostics_csv(self, path):
        write_columns_csv(path, {"t": self.diag_t, "dt": self.diag_dt, "mass": self.diag_mass,
                                 "max_speed": self.diag_speed})


def run(scenario: Scenario, progress=None) -> Trajectory:
    """Integrate ``scenario`` to ``t_end``, storing states at the snapshot times."""
    scenario.validate()
    grid, model = scenario.grid, scenario.model
    dx = grid.dx
    boundary = scenario.far_field
    state = StateField(np.array(scenario.v0, dtype=float), np.array(scenario.u0, dtype=float))
    traj = Trajectory(scenario)
    targets = [t for t in scenario.snapshot_times]
    if not targets or targets[-1] < scenario.t_end:
        targets.append(scenario.t_end)
    t = 0.0
    budget = [0.0]
    mass0 = float(np.sum(state.v) * dx)
    traj.diag_t.append(0.0)
    traj.diag_dt.append(0.0)
    traj.diag_mass.append(mass0)
    traj.diag_speed.append(max_wave_speed(state, model))
    traj.diag_budget.append(0.0)
    requested = set(float(s) for s in scenario.snapshot_times)
    for target in targets:
        while t < target:
            speed = max_wave_speed(state, model)
            dt = min(scenario.cfl * dx / speed, target - t)
            try:
                state = step(state, dt, t, model, boundary, dx, cfl=1.0, theta=scenario.theta,
                             budget=budget)
            except (DomainError, AdmissibilityError, CFLError) as exc:
                raise StepFailure(t, exc) from exc
            t = target if dt == target - t else t + dt
            traj.diag_t.append(t)
            traj.diag_dt.append(dt)
            traj.diag_mass.append(float(np.sum(state.v) * dx))
            traj.diag_speed.append(speed)
            traj.diag_budget.append(budget[0] * 1.0)
        if target in requested or target == 0.0:
            traj.times.append(float(target))
            traj.states.append(state)
        if progress is not None:
            progress(t)
    return traj
