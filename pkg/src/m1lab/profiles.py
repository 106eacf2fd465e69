"""Asymptotic profiles: the nonlinear diffusion wave and the correction pair.

The diffusion wave solves the porous-media type problem

    vbar_t = -(1/alpha) p(vbar)_xx,   ubar = -(1/alpha) p(vbar)_x,
    vbar_x(0, t) = 0,  vbar -> v_plus as x -> infinity,

and is integrated with backward Euler plus Newton on a finite-volume
discretization, so the excess mass ``int (vbar - v_plus)`` is conserved up
to the far-field truncation.  The correction pair ``(vhat, uhat)`` absorbs
the far-field velocity ``u_plus * exp(-alpha t)`` and has a closed form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .closure import ModelSpec
from .decay import decay_report, series_name, theorem_table
from .errors import ConvergenceError, DomainError, FitError, PositivityError
from .grid import HalfLineGrid, cumulative_integral, ddx, integrate, lp_norm

logger = logging.getLogger(__name__)


def gaussian_phi0(grid: HalfLineGrid, center=2.0, width=2.0) -> np.ndarray:
    """Default diffusion-wave shape, normalized to unit discrete integral."""
    phi = np.exp(-(((grid.x - center) / width) ** 2))
    return grid.field(phi / integrate(phi, grid.dx))


def bump_m0(grid: HalfLineGrid, support_right=2.0) -> np.ndarray:
    """Smooth bump ``exp(-1/(s(1-s)))`` on ``(0, support_right)``, unit discrete mass."""
    if not 0.0 < support_right < grid.length:
        raise DomainError("bump support must lie inside the grid")
    s = grid.x / support_right
    inside = (s > 0.0) & (s < 1.0)
    m = np.zeros(grid.cells)
    m[inside] = np.exp(-1.0 / (s[inside] * (1.0 - s[inside])))
    if not m.any():
        raise DomainError("bump support is narrower than one cell")
    return grid.field(m / integrate(m, grid.dx))


def compute_delta0(v0, v_plus, phi0, u_plus, alpha, dx) -> float:
    """Diffusion-wave strength matching the zero-mass identity.

    ``delta0 = (int (v0 - v_plus) + u_plus / alpha) / int phi0``.
    """
    mass_phi = integrate(phi0, dx)
    if mass_phi == 0.0:
        raise DomainError("phi0 must have non-zero integral")
    return (integrate(np.asarray(v0) - v_plus, dx) + u_plus / alpha) / mass_phi


def correction_pair(u_plus, alpha, m0, t, dx):
    """``vhat = -(u_plus/alpha) e^{-alpha t} m0`` and ``uhat = u_plus e^{-alpha t} int_0^x m0``."""
    if t < 0.0:
        raise DomainError("time must be non-negative")
    m0 = np.asarray(m0, dtype=float)
    amp = u_plus * np.exp(-alpha * t)
    ramp = cumulative_integral(m0, dx)
    nz = np.flatnonzero(m0)
    if nz.size:
        # beyond the support the ramp is exactly one, so uhat is flat there
        ramp[nz[-1] + 1:] = 1.0
    return -amp / alpha * m0, amp * ramp


@dataclass(frozen=True)
class DiffusionWaveSetup:
    """Initial data ``v_plus + delta0 * phi0`` and the laws driving it.

    ``u_plus`` and ``m0`` only enter through the correction pair attached
    to every output bundle.
    """

    v_plus: float
    delta0: float
    phi0: np.ndarray
    model: ModelSpec
    u_plus: float = 0.0
    m0: np.ndarray | None = None

    @property
    def alpha(self):
        return self.model.alpha

    def initial_profile(self):
        return self.v_plus + self.delta0 * np.asarray(self.phi0)


@dataclass(frozen=True)
class ProfileBundle:
    t: float
    vbar: np.ndarray
    ubar: np.ndarray
    vhat: np.ndarray
    uhat: np.ndarray
    vbar_x: np.ndarray
    vbar_xx: np.ndarray
    vbar_xxx: np.ndarray
    vbar_t: np.ndarray
    vhat_x: np.ndarray
    uhat_x: np.ndarray

    def vhat_t(self, alpha):
        return -alpha * self.vhat


class DiffusionWaveSolver:
    """Backward-Euler/Newton integrator for the diffusion wave.

    The unknown is ``w = vbar - v_plus`` so the conserved excess mass is
    carried without cancellation.  Steps grow like ``growth * (1 + t)``,
    following the self-similar decay, and are capped by ``dt_max``.
    """

    def __init__(self, setup: DiffusionWaveSetup, grid: HalfLineGrid, growth=5e-3, dt_min=1e-3,
                 dt_max=np.inf, newton_tol=1e-14, max_newton=30):
        self.setup = setup
        self.grid = grid
        self.growth = growth
        self.dt_min = dt_min
        self.dt_max = dt_max
        self.newton_tol = newton_tol
        self.max_newton = max_newton
        self.steps = 0
        model = setup.model
        self._p = model.pressure
        self._dp = model.pressure_deriv
        self._p_plus = float(model.pressure(setup.v_plus))

    def _laplacian_p(self, P):
        """Discrete ``p_xx * dx^2`` with Neumann wall and Dirichlet far end."""
        lap = np.empty_like(P)
        lap[1:-1] = P[2:] - 2.0 * P[1:-1] + P[:-2]
        lap[0] = P[1] - P[0]
        # difference form so a uniform far field gives exactly zero
        lap[-1] = 2.0 * (self._p_plus - P[-1]) + (P[-2] - P[-1])
        return lap

    def rhs(self, vbar):
        """Discrete ``-(1/alpha) p(vbar)_xx``, the time derivative of the scheme."""
        P = np.asarray(self._p(vbar))
        return -self._laplacian_p(P) / (self.setup.alpha * self.grid.dx**2)

    def _implicit_step(self, w_old, dt):
        v_plus = self.setup.v_plus
        c = dt / (self.setup.alpha * self.grid.dx**2)
        w = w_old.copy()
        n = w.size
        ab = np.zeros((3, n))
        for it in range(self.max_newton):
            v = v_plus + w
            if np.any(v <= 0.0):
                raise PositivityError("Newton iterate lost positivity")
            P = np.asarray(self._p(v))
            dP = np.asarray(self._dp(v))
            res = w - w_old + c * self._laplacian_p(P)
            diag = 1.0 - 2.0 * c * dP
            diag[0] = 1.0 - c * dP[0]
            diag[-1] = 1.0 - 3.0 * c * dP[-1]
            ab[0, 1:] = c * dP[1:]
            ab[1] = diag
            ab[2, :-1] = c * dP[:-1]
            delta = solve_banded((1, 1), ab, -res)
            w += delta
            if np.max(np.abs(delta)) <= self.newton_tol * max(1.0, np.max(np.abs(w))):
                if np.any(v_plus + w <= 0.0):
                    raise PositivityError("implicit step lost positivity")
                return w
        raise ConvergenceError(f"Newton did not converge in {self.max_newton} iterations")

    def bundle(self, t, vbar) -> ProfileBundle:
        s, g = self.setup, self.grid
        dx = g.dx
        alpha = s.alpha
        P = np.asarray(self._p(vbar))
        ubar = -ddx(P, dx, left="even", right=self._p_plus) / alpha
        vbar_x = ddx(vbar, dx, left="even", right=s.v_plus)
        vbar_xx = ddx(vbar_x, dx, left="odd", right="extrapolate")
        vbar_xxx = ddx(vbar_xx, dx, left="even", right="extrapolate")
        m0 = np.zeros(g.cells) if s.m0 is None else s.m0
        vhat, uhat = correction_pair(s.u_plus, alpha, m0, t, dx)
        return ProfileBundle(
            t=float(t), vbar=vbar.copy(), ubar=ubar, vhat=vhat, uhat=uhat, vbar_x=vbar_x,
            vbar_xx=vbar_xx, vbar_xxx=vbar_xxx, vbar_t=self.rhs(vbar),
            vhat_x=ddx(vhat, dx), uhat_x=ddx(uhat, dx, left="odd", right="even"),
        )

    def run(self, output_times) -> list:
        times = np.asarray(sorted(set(float(t) for t in output_times)))
        if times.size and times[0] < 0.0:
            raise DomainError("output times must be non-negative")
        v0 = self.setup.initial_profile()
        if np.any(v0 <= 0.0):
            raise PositivityError("initial diffusion-wave profile must be positive")
        if self.setup.alpha <= 0.0:
            raise DomainError("alpha must be positive")
        w = v0 - self.setup.v_plus
        t = 0.0
        out = []
        for target in times:
            while t < target:
                dt = min(max(self.growth * (1.0 + t), self.dt_min), self.dt_max, target - t)
                # the final sliver before an output time may undercut dt_min
                if target - t - dt < 1e-12 * max(1.0, target):
                    dt = target - t
                w, taken = self._step_with_retry(w, dt)
                t = target if taken == target - t else t + taken
                self.steps += 1
            out.append(self.bundle(t, self.setup.v_plus + w))
        return out

    def _step_with_retry(self, w, dt, retries=8):
        for _ in range(retries):
            try:
                return self._implicit_step(w, dt), dt
            except (ConvergenceError, PositivityError) as exc:
                logger.debug("rejecting diffusion-wave step dt=%g: %s", dt, exc)
                last = exc
                dt *= 0.5
        raise last


def solve_diffusion_wave(setup: DiffusionWaveSetup, grid: HalfLineGrid, t_end, output_times=None,
                         **solver_kw) -> list:
    """Profiles at ``output_times`` (default: ``t_end`` only), as :class:`ProfileBundle` list.

    When the requested times do not include ``t_end`` it is appended.
    """
    times = [t_end] if output_times is None else list(output_times)
    if max(times) < t_end:
        times.append(t_end)
    return DiffusionWaveSolver(setup, grid, **solver_kw).run(times)


def profile_derivative_fields(bundle: ProfileBundle, v_plus, dx, alpha=None) -> dict:
    """``d_x^k d_t^j (vbar - v_plus)`` for ``k <= 2``, ``j <= 1``, keyed ``(k, j)``."""
    vt = bundle.vbar_t
    vt_x = ddx(vt, dx, left="even", right="extrapolate")
    return {
        (0, 0): bundle.vbar - v_plus,
        (1, 0): bundle.vbar_x,
        (2, 0): bundle.vbar_xx,
        (0, 1): vt,
        (1, 1): vt_x,
        (2, 1): ddx(vt_x, dx, left="odd", right="extrapolate"),
    }


def profile_norm_series(bundles, v_plus, dx) -> tuple:
    """Times and ``{series_name: values}`` for every profile-table entry."""
    times = np.array([b.t for b in bundles])
    series = {}
    for b in bundles:
        fields = profile_derivative_fields(b, v_plus, dx)
        for (k, j), f in fields.items():
            for norm, p in (("L1", 1), ("L2", 2), ("Linf", np.inf)):
                series.setdefault(series_name("vbar", k, j, norm), []).append(lp_norm(f, dx, p))
    return times, {k: np.array(v) for k, v in series.items()}


def verify_profile_decay(bundles, v_plus, dx, window=None, tolerances=None) -> list:
    """Fit every diffusion-wave norm against its expected exponent.

    Needs at least ten positive output times spanning two decades.
    """
    times = np.array([b.t for b in bundles])
    pos = times[times > 0.0]
    if pos.size < 10 or pos[-1] / pos[0] < 100.0:
        raise FitError("profile decay check needs >= 10 output times spanning >= 2 decades")
    t, series = profile_norm_series(bundles, v_plus, dx)
    return decay_report(t, series, theorem_table("lemma2.1"), window=window,
                        tolerances=tolerances)


def correction_decay_ratios(u_plus, alpha, m0, times, dx) -> dict:
    """``||d_x^k vhat(t)||_p / (e^{-alpha t} ||d_x^k vhat(0)||_p)`` and the ``uhat`` analogues.

    Every ratio is one up to rounding because time enters as a scalar factor.
    """
    vh0, uh0 = correction_pair(u_plus, alpha, m0, 0.0, dx)
    base = _correction_fields(vh0, uh0, dx)
    out = {}
    for t in times:
        vh, uh = correction_pair(u_plus, alpha, m0, t, dx)
        cur = _correction_fields(vh, uh, dx)
        decay = np.exp(-alpha * t)
        for key, f in cur.items():
            for norm, p in (("L1", 1), ("L2", 2), ("Linf", np.inf)):
                if key == ("uhat", 0) and norm != "Linf":
                    continue
                b = lp_norm(base[key], dx, p)
                out.setdefault((key[0], key[1], norm), []).append(lp_norm(f, dx, p) / (decay * b))
    return {k: np.array(v) for k, v in out.items()}


def _correction_fields(vh, uh, dx):
    vh_x = ddx(vh, dx)
    uh_x = ddx(uh, dx, left="odd", right="even")
    return {
        ("vhat", 0): vh,
        ("vhat", 1): vh_x,
        ("vhat", 2): ddx(vh_x, dx),
        ("uhat", 0): uh,
        ("uhat", 1): uh_x,
        ("uhat", 2): ddx(uh_x, dx),
    }
