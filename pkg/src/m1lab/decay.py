"""Power-law decay fits and the exponent tables they are checked against.

Norm series ``||q(t)|| ~ A (1+t)^beta`` are fitted by least squares in
log-log coordinates.  :class:`PowerLawDecay` exposes the regression through
the scikit-learn estimator protocol so it composes with pipelines and
``get_params``/``set_params``; :func:`fit_exponent` is the functional entry
point used by the rest of the package.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import FitError
from .grid import cumulative_integral, integrate

MIN_SAMPLES = 8
DEGENERATE = "degenerate (zero series)"


class PowerLawDecay(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log y = log A + beta * log(offset + t)``.

    Parameters
    ----------
    offset : float
        Shift of the time axis; ``1.0`` regresses against ``log(1 + t)``
        and ``0.0`` against ``log t``.

    Attributes
    ----------
    exponent_ : float
    log_amplitude_ : float
    r2_ : float
        Coefficient of determination in log-log space.
    """

    def __init__(self, offset=1.0):
        self.offset = offset

    def _log_time(self, t):
        s = np.asarray(t, dtype=float).ravel() + self.offset
        if np.any(s <= 0.0):
            raise FitError("shifted times must be positive")
        return np.log(s)

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(np.asarray(X, dtype=float), (-1, 1)), y,
                         dtype=float, y_numeric=True)
        if np.any(y <= 0.0):
            raise FitError("power-law fit needs strictly positive values")
        if y.size < 2:
            raise FitError("power-law fit needs at least two samples")
        lt = self._log_time(X[:, 0])
        ly = np.log(y)
        slope, intercept = np.polyfit(lt, ly, 1)
        resid = ly - (intercept + slope * lt)
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        ss_res = float(np.sum(resid**2))
        self.exponent_ = float(slope)
        self.log_amplitude_ = float(intercept)
        # a spread at rounding level means the data are an exact constant
        exact = ss_tot <= 1e-24 * ly.size * max(1.0, float(np.max(np.abs(ly))) ** 2)
        self.r2_ = 1.0 if exact else 1.0 - ss_res / ss_tot
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        X = check_array(np.reshape(np.asarray(X, dtype=float), (-1, 1)))
        return np.exp(self.log_amplitude_ + self.exponent_ * self._log_time(X[:, 0]))


@dataclass
class DecayFit:
    quantity: str
    t_min: float
    t_max: float
    exponent: float = float("nan")
    log_amplitude: float = float("nan")
    r2: float = float("nan")
    n_samples: int = 0
    expected: float | None = None
    tolerance: float | None = None
    k: int = 0
    j: int = 0
    norm: str = "L2"
    status: str | None = None
    gated: bool = True

    @property
    def gap(self) -> float:
        if self.expected is None:
            return float("nan")
        return self.exponent - self.expected

    @property
    def passed(self) -> bool:
        if self.status is not None or self.expected is None or self.tolerance is None:
            return False
        return bool(abs(self.gap) <= self.tolerance)

    @property
    def verdict(self) -> str:
        if self.status is not None:
            return self.status
        if self.expected is None or self.tolerance is None:
            return "report"
        return "pass" if self.passed else "fail"


def default_window(times, decades=1.5, discard_fraction=0.1):
    """Last ``decades`` of the run minus the first ``discard_fraction`` of its samples."""
    t = np.asarray(times, dtype=float)
    t_max = float(t[-1])
    start = t_max / 10.0**decades
    inside = t[(t >= start) & (t <= t_max)]
    if inside.size == 0:
        raise FitError("empty fit window")
    drop = int(np.floor(discard_fraction * inside.size))
    return float(inside[min(drop, inside.size - 1)]), t_max


def fit_exponent(times, values, window=None, offset=1.0, quantity="", expected=None,
                 tolerance=None, k=0, j=0, norm="L2") -> DecayFit:
    """Fit a decay exponent on ``window = (t_min, t_max)``.

    Raises :class:`FitError` on non-increasing times, too few samples or
    non-positive values inside the window.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape:
        raise FitError("times and values differ in length")
    if np.any(np.diff(t) <= 0.0):
        raise FitError("times must be strictly increasing")
    t_min, t_max = default_window(t) if window is None else window
    if not t_min < t_max:
        raise FitError("fit window must satisfy t_min < t_max")
    sel = (t >= t_min) & (t <= t_max)
    n = int(sel.sum())
    if n < MIN_SAMPLES:
        raise FitError(f"fit window holds {n} samples, need {MIN_SAMPLES}")
    est = PowerLawDecay(offset=offset).fit(t[sel], y[sel])
    return DecayFit(quantity=quantity, t_min=float(t_min), t_max=float(t_max),
                    exponent=est.exponent_, log_amplitude=est.log_amplitude_, r2=est.r2_,
                    n_samples=n, expected=expected, tolerance=tolerance, k=k, j=j, norm=norm)


def series_name(quantity, k=0, j=0, norm="L2") -> str:
    """Canonical column name, e.g. ``V_x``, ``z_xt``, ``vbar_xx[Linf]``."""
    name = quantity if k == 0 and j == 0 else f"{quantity}_{'x' * k}{'t' * j}"
    return name if norm == "L2" else f"{name}[{norm}]"


# ---------------------------------------------------------------- tables

THEOREM_IDS = ("thm1", "thm2_improved", "thm2_faster", "lemma2.1", "lemma2.2")


@dataclass(frozen=True)
class TheoremTable:
    theorem_id: str
    entries: dict
    hypotheses: tuple = ()
    kind: str = "power"
    notes: dict = field(default_factory=dict)

    def expected(self, quantity, k=0, j=0, norm="L2") -> float:
        return float(self.entries[(quantity, k, j, norm)])


def _perturbation_table(theorem_id, v_shift, z_shift, ztt, v_kmin):
    entries = {}
    for k in range(v_kmin, 4):
        entries[("V", k, 0, "L2")] = -Fraction(k, 2) - v_shift
    for j in range(2):
        for k in range(3 - j):
            entries[("z", k, j, "L2")] = -Fraction(k, 2) - j - z_shift
    entries[("z", 0, 2, "L2")] = ztt
    return entries


def theorem_table(theorem_id: str) -> TheoremTable:
    """Expected exponents for one of :data:`THEOREM_IDS`.

    Perturbation tables are keyed ``("V" | "z", k, j, "L2")`` where ``k``
    counts x-derivatives and ``j`` t-derivatives; ``("z", 0, 2)`` is
    ``z_tt``.  ``lemma2.1`` is keyed ``("vbar", k, j, norm)`` for the
    diffusion wave and ``lemma2.2`` lists exponential rates in units of
    ``alpha`` for the correction pair.
    """
    if theorem_id == "thm1":
        return TheoremTable(theorem_id, _perturbation_table(theorem_id, 0, 1, -Fraction(5, 2), 1),
                            hypotheses=("small_data",))
    if theorem_id == "thm2_improved":
        return TheoremTable(theorem_id,
                            _perturbation_table(theorem_id, Fraction(1, 4), Fraction(5, 4),
                                                -Fraction(11, 4), 0),
                            hypotheses=("small_data", "l1_data"))
    if theorem_id == "thm2_faster":
        return TheoremTable(theorem_id,
                            _perturbation_table(theorem_id, Fraction(3, 4), Fraction(7, 4),
                                                -Fraction(13, 4), 0),
                            hypotheses=("small_data", "u_plus_zero", "zero_mass", "w0_l1"))
    if theorem_id == "lemma2.1":
        entries = {}
        for k in range(3):
            for j in range(2):
                entries[("vbar", k, j, "L2")] = -Fraction(4 * j + 2 * k + 1, 4)
                entries[("vbar", k, j, "L1")] = -Fraction(2 * j + k, 2)
                entries[("vbar", k, j, "Linf")] = -Fraction(2 * j + k + 1, 2)
        return TheoremTable(theorem_id, entries, hypotheses=("phi0_nonzero_mass",))
    if theorem_id == "lemma2.2":
        entries = {}
        for norm in ("L1", "L2", "Linf"):
            for k in range(3):
                entries[("vhat", k, 0, norm)] = Fraction(-1)
            for k in range(1, 3):
                entries[("uhat", k, 0, norm)] = Fraction(-1)
        entries[("uhat", 0, 0, "Linf")] = Fraction(-1)
        return TheoremTable(theorem_id, entries, kind="exponential")
    raise KeyError(f"unknown theorem id {theorem_id!r}; choose from {THEOREM_IDS}")


# ---------------------------------------------------------------- hypotheses

@dataclass
class HypothesisFlags:
    u_plus_zero: bool
    l1_data: bool
    zero_mass: bool
    zero_mass_value: float
    w0_l1: bool
    small_data: float

    def satisfied(self, theorem_id) -> bool:
        if theorem_id == "thm1":
            return True
        if theorem_id == "thm2_improved":
            return self.l1_data
        if theorem_id == "thm2_faster":
            return self.l1_data and self.u_plus_zero and self.zero_mass and self.w0_l1
        return True

    @property
    def applicable(self) -> list:
        best = [t for t in ("thm2_faster", "thm2_improved", "thm1") if self.satisfied(t)]
        return best


def _tail_decays(f, x, start_frac, eps, rel_const):
    """Proxy for integrability: ``|f| x^(1+eps) <= C`` beyond ``start_frac * L``."""
    f = np.abs(np.asarray(f, dtype=float))
    scale = max(float(np.sum(f) * (x[1] - x[0])), np.finfo(float).tiny)
    tail = x >= start_frac * (x[-1] + 0.5 * (x[1] - x[0]))
    bound = float(np.max(f[tail] * x[tail] ** (1.0 + eps))) if tail.any() else 0.0
    return bound <= rel_const * scale


def hypothesis_check(V0, z0, x, alpha, u_plus, zero_mass_tol=1e-8, tail_start=0.8,
                     tail_eps=0.1, tail_const=1e-6) -> HypothesisFlags:
    """Numerical stand-ins for the hypotheses of the decay theorems.

    Integrability of ``V0 + z0/alpha`` and of its antiderivative ``W0`` is
    judged by a tail-decay proxy, since it cannot be decided on a truncated
    grid.  The zero-mass condition uses an absolute tolerance on the
    integral, which is reported as ``zero_mass_value``.
    """
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    data = np.asarray(V0, dtype=float) + np.asarray(z0, dtype=float) / alpha
    mass = integrate(data, dx)
    W0 = cumulative_integral(data, dx)
    small = float(np.sqrt(np.sum(V0**2) * dx) + np.sqrt(np.sum(z0**2) * dx))
    return HypothesisFlags(
        u_plus_zero=(u_plus == 0.0),
        l1_data=_tail_decays(data, x, tail_start, tail_eps, tail_const),
        zero_mass=abs(mass) <= zero_mass_tol,
        zero_mass_value=mass,
        w0_l1=_tail_decays(W0, x, tail_start, tail_eps, tail_const),
        small_data=small,
    )


# ---------------------------------------------------------------- reports

def decay_report(times, series: dict, table: TheoremTable, window=None, tolerances=None,
                 offset=1.0, gated=None) -> list:
    """One :class:`DecayFit` per table entry that has a matching series.

    ``series`` maps :func:`series_name` strings to value arrays aligned with
    ``times``.  ``tolerances`` maps the same names to verdict tolerances;
    entries without a tolerance are reported but not judged.  ``gated``
    optionally restricts which names count towards the overall verdict.
    """
    tolerances = tolerances or {}
    t = np.asarray(times, dtype=float)
    out = []
    for (q, k, j, norm), expected in table.entries.items():
        name = series_name(q, k, j, norm)
        if name not in series:
            continue
        y = np.asarray(series[name], dtype=float)
        win = default_window(t) if window is None else window
        sel = (t >= win[0]) & (t <= win[1])
        tol = tolerances.get(name)
        is_gated = tol is not None and (gated is None or name in gated)
        if np.all(y[sel] == 0.0):
            out.append(DecayFit(quantity=name, t_min=win[0], t_max=win[1], n_samples=int(sel.sum()),
                                expected=float(expected), tolerance=tol, k=k, j=j, norm=norm,
                                status=DEGENERATE, gated=is_gated))
            continue
        try:
            fit = fit_exponent(t, y, window=win, offset=offset, quantity=name,
                               expected=float(expected), tolerance=tol, k=k, j=j, norm=norm)
            fit.gated = is_gated
        except FitError as exc:
            fit = DecayFit(quantity=name, t_min=win[0], t_max=win[1], expected=float(expected),
                           tolerance=tol, k=k, j=j, norm=norm, status=f"error: {exc}",
                           gated=is_gated)
        out.append(fit)
    return out


def report_passed(fits) -> bool:
    gated = [f for f in fits if f.gated]
    return bool(gated) and all(f.passed for f in gated)


REPORT_COLUMNS = ("quantity", "k", "j", "norm", "expected", "fitted", "R2", "t_min", "t_max",
                  "tolerance", "verdict")


def write_report_csv(path, fits):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for f in fits:
            w.writerow([f.quantity, f.k, f.j, f.norm,
                        "" if f.expected is None else format(f.expected, ".17g"),
                        format(f.exponent, ".17g"), format(f.r2, ".17g"),
                        format(f.t_min, ".17g"), format(f.t_max, ".17g"),
                        "" if f.tolerance is None else format(f.tolerance, ".17g"),
                        f.verdict])
