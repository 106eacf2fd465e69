"""Perturbation variables around the asymptotic profiles.

With ``w = v - vbar - vhat`` the perturbation of the specific volume is
carried through its antiderivative ``V = -int_x^inf w`` and the velocity
perturbation is ``z = u - ubar - uhat``.  They satisfy

    V_t - z = 0,
    z_t + (p'(vbar) V_x)_x + alpha z = F1 + F2,

with the forcings built here.  Time derivatives are taken by differencing
stored snapshots, so every helper works on plain arrays.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .closure import ModelSpec
from .decay import series_name
from .errors import DomainError, VacuumError
from .grid import StateField, ddx, integrate, lp_norm, tail_integral
from .profiles import ProfileBundle


@dataclass(frozen=True)
class PerturbationSnapshot:
    t: float
    V: np.ndarray
    V_x: np.ndarray
    V_xx: np.ndarray
    V_xxx: np.ndarray
    z: np.ndarray
    z_x: np.ndarray
    z_xx: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    # filled in by attach_time_derivatives
    V_t: np.ndarray | None = None
    V_tt: np.ndarray | None = None
    z_t: np.ndarray | None = None
    z_xt: np.ndarray | None = None
    z_tt: np.ndarray | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def has_time_derivatives(self) -> bool:
        return self.z_t is not None


def _check_alignment(state: StateField, bundle: ProfileBundle):
    if state.v.shape != bundle.vbar.shape:
        raise DomainError("state and profiles live on different grids")


def eval_F1(V_x, bundle: ProfileBundle, model: ModelSpec, dx) -> np.ndarray:
    """``(1/alpha) p(vbar)_xt - (p(V_x + vbar + vhat) - p(vbar) - p'(vbar) V_x)_x``."""
    vbar = bundle.vbar
    v = np.asarray(V_x) + vbar + bundle.vhat
    if np.any(v <= 0.0):
        raise VacuumError("V_x + vbar + vhat must stay positive")
    dp = np.asarray(model.pressure_deriv(vbar))
    # p(vbar)_t = p'(vbar) vbar_t is even at the wall and vanishes far out
    p_t = dp * bundle.vbar_t
    first = ddx(p_t, dx, left="even", right=0.0) / model.alpha
    rem = np.asarray(model.pressure(v)) - np.asarray(model.pressure(vbar)) - dp * V_x
    return first - ddx(rem, dx, left="even", right=0.0)


def eval_F2(V_x, z, bundle: ProfileBundle, model: ModelSpec, dx) -> np.ndarray:
    """``(g(z + ubar + uhat) f(V_x + vbar + vhat))_x`` in divergence form."""
    if not model.has_flux_coupling:
        return np.zeros_like(np.asarray(z, dtype=float))
    v = np.asarray(V_x) + bundle.vbar + bundle.vhat
    u = np.asarray(z) + bundle.ubar + bundle.uhat
    gf = np.asarray(model.flux_g(u)) * np.asarray(model.flux_f(v))
    # at x = L the state is (vbar + vhat, ubar + uhat) with V_x = z = 0
    far = float(model.flux_g(bundle.ubar[-1] + bundle.uhat[-1])) * float(
        model.flux_f(bundle.vbar[-1] + bundle.vhat[-1]))
    return ddx(gf, dx, left="even", right=far)


def eval_F2_expanded(snap: "PerturbationSnapshot", bundle: ProfileBundle, model: ModelSpec,
                     dx) -> np.ndarray:
    """Chain-rule form ``g' f (V_xt + ubar_x + vhat_t) + g f' (V_xx + vbar_x + vhat_x)``.

    ``ubar_x = -p(vbar)_xx / alpha`` and ``uhat_x = vhat_t`` hold for the
    profiles by construction; trading ``z_x`` for ``V_xt`` is exact only for
    solutions, so the two forms agree to discretization order there.  Needs
    the time-derivative fields.
    """
    if snap.V_t is None:
        raise DomainError("attach time derivatives before the expanded form")
    if not model.has_flux_coupling:
        return np.zeros_like(snap.z)
    v = snap.V_x + bundle.vbar + bundle.vhat
    u = snap.z + bundle.ubar + bundle.uhat
    V_xt = ddx(snap.V_t, dx, left="odd", right=0.0)
    ubar_x = ddx(bundle.ubar, dx, left="odd", right=0.0)
    u_x = V_xt + ubar_x + bundle.vhat_t(model.alpha)
    v_x = snap.V_xx + bundle.vbar_x + bundle.vhat_x
    g, dg = np.asarray(model.flux_g(u)), np.asarray(model.flux_g_deriv(u))
    f, df = np.asarray(model.flux_f(v)), np.asarray(model.flux_f_deriv(v))
    return dg * f * u_x + g * df * v_x


def build_perturbation(state: StateField, bundle: ProfileBundle, model: ModelSpec, dx,
                       tail_tol=None) -> PerturbationSnapshot:
    """``V``, ``z``, their x-derivatives and the forcings at one time.

    ``V_x`` is the pointwise difference ``v - vbar - vhat`` rather than a
    derivative of the tail integral.  A :class:`~m1lab.errors.TailWarning`
    flags a difference that has not decayed at the truncation point.
    """
    _check_alignment(state, bundle)
    w = state.v - bundle.vbar - bundle.vhat
    V = -tail_integral(w, dx, tail_tol)
    z = state.u - bundle.ubar - bundle.uhat
    # V_x is even and z odd at the wall; both vanish at x = L
    V_xx = ddx(w, dx, left="even", right=0.0)
    V_xxx = ddx(V_xx, dx, left="odd", right="extrapolate")
    z_x = ddx(z, dx, left="odd", right=0.0)
    z_xx = ddx(z_x, dx, left="even", right="extrapolate")
    return PerturbationSnapshot(
        t=bundle.t, V=V, V_x=w, V_xx=V_xx, V_xxx=V_xxx, z=z, z_x=z_x, z_xx=z_xx,
        F1=eval_F1(w, bundle, model, dx), F2=eval_F2(w, z, bundle, model, dx),
        extra={"V_wall": float(V[0]), "z_wall": float(z[0])},
    )


def zero_mass_check(state: StateField, bundle: ProfileBundle, dx) -> float:
    """``int (v - vbar - vhat)``; zero at t = 0 when delta0 is matched."""
    _check_alignment(state, bundle)
    return integrate(state.v - bundle.vbar - bundle.vhat, dx)


def time_derivative_weights(times, i):
    """Three-point weights for ``d/dt`` and ``d^2/dt^2`` at ``times[i]``.

    Returns ``(idx, w1, w2)``: centred weights inside, one-sided ones at the
    ends.  ``d/dt`` is second order everywhere; ``d^2/dt^2`` is second order
    on uniform centred stencils and first order otherwise.
    """
    t = np.asarray(times, dtype=float)
    n = t.size
    if n < 3:
        raise DomainError("time differencing needs at least 3 snapshots")
    c = min(max(i, 1), n - 2)
    idx = np.array([c - 1, c, c + 1])
    t0, t1, t2 = t[idx]
    s = t[i]
    # Lagrange basis derivatives on the three nodes, evaluated at s
    w1 = np.array([
        ((s - t1) + (s - t2)) / ((t0 - t1) * (t0 - t2)),
        ((s - t0) + (s - t2)) / ((t1 - t0) * (t1 - t2)),
        ((s - t0) + (s - t1)) / ((t2 - t0) * (t2 - t1)),
    ])
    w2 = np.array([
        2.0 / ((t0 - t1) * (t0 - t2)),
        2.0 / ((t1 - t0) * (t1 - t2)),
        2.0 / ((t2 - t0) * (t2 - t1)),
    ])
    return idx, w1, w2


def attach_time_derivatives(snapshots, dx) -> list:
    """Return copies of ``snapshots`` with ``V_t, V_tt, z_t, z_xt, z_tt`` set."""
    snaps = list(snapshots)
    times = np.array([s.t for s in snaps])
    if np.any(np.diff(times) <= 0.0):
        raise DomainError("snapshot times must increase strictly")
    out = []
    for i, s in enumerate(snaps):
        idx, w1, w2 = time_derivative_weights(times, i)
        Vs = [snaps[k].V for k in idx]
        zs = [snaps[k].z for k in idx]
        z_t = sum(a * f for a, f in zip(w1, zs))
        out.append(replace(
            s,
            V_t=sum(a * f for a, f in zip(w1, Vs)),
            V_tt=sum(a * f for a, f in zip(w2, Vs)),
            z_t=z_t,
            z_xt=ddx(z_t, dx, left="odd", right=0.0),
            z_tt=sum(a * f for a, f in zip(w2, zs)),
        ))
    return out


def reformulation_residual(snap: PerturbationSnapshot, bundle: ProfileBundle, model: ModelSpec,
                           dx) -> np.ndarray:
    """``z_t + (p'(vbar) V_x)_x + alpha z - F1 - F2``."""
    if not snap.has_time_derivatives:
        raise DomainError("attach time derivatives before evaluating the residual")
    flux = np.asarray(model.pressure_deriv(bundle.vbar)) * snap.V_x
    return (snap.z_t + ddx(flux, dx, left="even", right=0.0) + model.alpha * snap.z
            - snap.F1 - snap.F2)


def transport_residual(snap: PerturbationSnapshot) -> np.ndarray:
    """``V_t - z``."""
    if not snap.has_time_derivatives:
        raise DomainError("attach time derivatives before evaluating the residual")
    return snap.V_t - snap.z


def sobolev_inequality_check(f, dx, slack=1e-12) -> bool:
    """Check ``||f||_inf <= sqrt(2) ||f||^(1/2) ||f_x||^(1/2)`` on discrete norms.

    The derivative is a centred difference extended by one-sided stencils;
    ``slack`` absorbs rounding on fields that are identically zero.
    """
    f = np.asarray(f, dtype=float)
    lhs = float(np.max(np.abs(f))) if f.size else 0.0
    fx = ddx(f, dx)
    rhs = np.sqrt(2.0) * np.sqrt(lp_norm(f, dx, 2)) * np.sqrt(lp_norm(fx, dx, 2))
    return lhs <= rhs + slack * max(1.0, lhs)


# norms tracked for every snapshot: (quantity, k, j, attribute)
NORM_FIELDS = (
    ("V", 0, 0, "V"), ("V", 1, 0, "V_x"), ("V", 2, 0, "V_xx"), ("V", 3, 0, "V_xxx"),
    ("z", 0, 0, "z"), ("z", 1, 0, "z_x"), ("z", 2, 0, "z_xx"),
    ("z", 0, 1, "z_t"), ("z", 1, 1, "z_xt"), ("z", 0, 2, "z_tt"),
)


@dataclass
class NormSeries:
    """L2 norms of the perturbation family over time, plus ``N(t)``.

    ``N`` is the running supremum of the weighted energy
    ``sum (1+t)^k |d_x^k V|^2 + (1+t)^(k+2) |d_x^k z|^2 + (1+t)^(k+4) |d_x^k z_t|^2``.
    """

    times: np.ndarray
    values: dict
    N: np.ndarray

    def __getitem__(self, name):
        return self.values[name]

    @property
    def names(self) -> list:
        return list(self.values)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "norm_name", "value"])
            for i, t in enumerate(self.times):
                for name, vals in self.values.items():
                    w.writerow([format(float(t), ".17g"), name, format(float(vals[i]), ".17g")])
                w.writerow([format(float(t), ".17g"), "N", format(float(self.N[i]), ".17g")])


def weighted_energy(snap: PerturbationSnapshot, dx) -> float:
    s = 1.0 + snap.t
    e = sum(s**k * lp_norm(getattr(snap, a), dx, 2) ** 2
            for k, a in enumerate(("V", "V_x", "V_xx", "V_xxx")))
    e += sum(s ** (k + 2) * lp_norm(getattr(snap, a), dx, 2) ** 2
             for k, a in enumerate(("z", "z_x", "z_xx")))
    e += sum(s ** (k + 4) * lp_norm(getattr(snap, a), dx, 2) ** 2
             for k, a in enumerate(("z_t", "z_xt")))
    return float(e)


def norm_series(snapshots, dx) -> NormSeries:
    """Norm table for snapshots carrying time derivatives (needs >= 3)."""
    snaps = list(snapshots)
    if len(snaps) < 3:
        raise DomainError("norm series needs at least 3 snapshots")
    if not all(s.has_time_derivatives for s in snaps):
        snaps = attach_time_derivatives(snaps, dx)
    times = np.array([s.t for s in snaps])
    values = {series_name(q, k, j): np.array([lp_norm(getattr(s, a), dx, 2) for s in snaps])
              for q, k, j, a in NORM_FIELDS}
    energy = np.array([weighted_energy(s, dx) for s in snaps])
    return NormSeries(times=times, values=values, N=np.maximum.accumulate(energy))
