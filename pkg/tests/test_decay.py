import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from m1lab.decay import (DEGENERATE, PowerLawDecay, decay_report, default_window, fit_exponent,
                         hypothesis_check, report_passed, series_name, theorem_table,
                         write_report_csv)
from m1lab.errors import FitError

T = np.geomspace(1.0, 1e4, 64)


def test_exact_power_law():
    fit = fit_exponent(T, 3.0 * (1.0 + T) ** -0.5, window=(1.0, 1e4))
    assert fit.exponent == pytest.approx(-0.5, abs=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert np.exp(fit.log_amplitude) == pytest.approx(3.0, rel=1e-10)


def test_constant_series():
    fit = fit_exponent(T, np.full(T.size, 2.5), window=(1.0, 1e4))
    assert abs(fit.exponent) < 1e-12 and fit.r2 == 1.0


@given(st.floats(1e-6, 1e6), st.floats(-3.0, 0.5))
def test_rescaling_invariance(scale, beta):
    y = (1.0 + T) ** beta
    a = fit_exponent(T, y, window=(10.0, 1e4)).exponent
    b = fit_exponent(T, scale * y, window=(10.0, 1e4)).exponent
    assert a == pytest.approx(beta, abs=1e-9)
    assert abs(a - b) < 1e-9


def test_window_shift_stability():
    t = np.geomspace(1.0, 1e5, 200)
    y = 7.0 * (1.0 + t) ** -1.25
    a = fit_exponent(t, y, window=(100.0, 400.0)).exponent
    b = fit_exponent(t, y, window=(200.0, 800.0)).exponent
    assert abs(a - b) < 1e-8


def test_log_correction_drifts_from_above():
    s = sp.Symbol("s", positive=True)
    f = sp.log(s) / s  # s = 1 + t
    slope = sp.lambdify(s, sp.simplify(sp.diff(sp.log(f), s) * s))
    t = np.geomspace(1.0, 1e8, 400)
    y = np.log1p(t) / (1.0 + t)
    fits = [fit_exponent(t, y, window=(lo, 4.0 * lo)).exponent for lo in (1e2, 1e4, 1e6)]
    assert all(e > -1.0 for e in fits)
    assert fits[0] > fits[1] > fits[2]
    for lo, e in zip((1e2, 1e4, 1e6), fits):
        assert e == pytest.approx(slope(1.0 + 2.0 * lo), abs=5e-3)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_exponent(T, -np.ones(T.size), window=(1.0, 1e4))
    with pytest.raises(FitError):
        fit_exponent(T[::-1], np.ones(T.size), window=(1.0, 1e4))
    with pytest.raises(FitError):
        fit_exponent(T, np.ones(T.size), window=(1.0, 1.5))
    with pytest.raises(FitError):
        fit_exponent(T, np.ones(T.size - 1))
    with pytest.raises(FitError):
        fit_exponent(T, np.ones(T.size), window=(10.0, 1.0))


def test_default_window():
    t = np.linspace(0.0, 1000.0, 1001)
    lo, hi = default_window(t)
    assert hi == 1000.0
    start = 1000.0 / 10**1.5
    n_inside = np.sum(t >= start)
    assert lo == t[t >= start][int(0.1 * n_inside)]


def test_estimator_protocol():
    est = PowerLawDecay(offset=0.0)
    assert est.get_params() == {"offset": 0.0}
    with pytest.raises(NotFittedError):
        est.predict([1.0])
    est.fit(T, 2.0 * T**-0.75)
    np.testing.assert_allclose(est.predict(T[:3]), 2.0 * T[:3] ** -0.75, rtol=1e-10)
    assert est.score(T, 2.0 * T**-0.75) == pytest.approx(1.0)
    c = clone(est).set_params(offset=1.0)
    assert c.offset == 1.0 and not hasattr(c, "exponent_")
    with pytest.raises(FitError):
        PowerLawDecay(offset=-5.0).fit(T, T**-1.0)


@pytest.mark.parametrize("theorem, q, k, j, value", [
    ("thm1", "V", 1, 0, -0.5),
    ("thm2_improved", "z", 0, 0, -1.25),
    ("thm2_faster", "V", 0, 0, -0.75),
    ("thm2_improved", "V", 3, 0, -1.75),
    ("thm2_improved", "z", 1, 1, -2.75),
    ("thm2_improved", "z", 0, 2, -2.75),
    ("thm1", "z", 0, 2, -2.5),
    ("thm2_faster", "z", 2, 0, -2.75),
    ("thm2_faster", "z", 0, 2, -3.25),
])
def test_theorem_tables_pinned(theorem, q, k, j, value):
    assert theorem_table(theorem).expected(q, k, j) == value


def test_profile_and_correction_tables():
    tab = theorem_table("lemma2.1")
    assert tab.expected("vbar", 0, 0, "L2") == -0.25
    assert tab.expected("vbar", 1, 0, "L2") == -0.75
    assert tab.expected("vbar", 0, 0, "Linf") == -0.5
    assert tab.expected("vbar", 2, 1, "L1") == -2.0
    assert theorem_table("lemma2.2").kind == "exponential"
    assert ("V", 0, 0, "L2") not in theorem_table("thm1").entries
    with pytest.raises(KeyError):
        theorem_table("thm3")


def test_series_names():
    assert series_name("V") == "V"
    assert series_name("z", 1, 1) == "z_xt"
    assert series_name("vbar", 2, 0, "Linf") == "vbar_xx[Linf]"


def _data(x, mass_shift=0.0):
    V0 = -0.01 * np.exp(-(x - 20.0) ** 2)
    z0 = 0.01 * np.exp(-(x - 20.0) ** 2) + mass_shift * np.exp(-(x - 10.0) ** 2) / np.sqrt(np.pi)
    return V0, z0


def test_hypotheses_compact_zero_mass():
    x = (np.arange(4000) + 0.5) * 0.01
    flags = hypothesis_check(*_data(x), x, 1.0, 0.0)
    assert flags.u_plus_zero and flags.l1_data and flags.zero_mass and flags.w0_l1
    assert flags.applicable[0] == "thm2_faster"


def test_hypotheses_nonzero_u_plus():
    x = (np.arange(4000) + 0.5) * 0.01
    flags = hypothesis_check(*_data(x), x, 1.0, 0.3)
    assert not flags.satisfied("thm2_faster")
    assert flags.satisfied("thm2_improved")


def test_hypotheses_mass_reported():
    x = (np.arange(4000) + 0.5) * 0.01
    flags = hypothesis_check(*_data(x, 0.1), x, 1.0, 0.0)
    assert not flags.zero_mass
    assert flags.zero_mass_value == pytest.approx(0.1, rel=1e-6)
    assert not flags.w0_l1


def test_decay_report_synthetic(tmp_path):
    tab = theorem_table("thm2_improved")
    t = np.geomspace(1.0, 1e4, 80)
    series = {series_name(q, k, j, n): (1.0 + t) ** float(e)
              for (q, k, j, n), e in tab.entries.items()}
    tols = {name: 0.01 for name in series}
    fits = decay_report(t, series, tab, tolerances=tols)
    assert len(fits) == len(tab.entries) and report_passed(fits)
    series["V"] = series["V"] * (1.0 + t) ** -0.5
    fits = decay_report(t, series, tab, tolerances=tols)
    bad = [f for f in fits if not f.passed]
    assert [f.quantity for f in bad] == ["V"]
    assert bad[0].gap == pytest.approx(-0.5, abs=1e-9) and bad[0].verdict == "fail"
    write_report_csv(tmp_path / "r.csv", fits)
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head == "quantity,k,j,norm,expected,fitted,R2,t_min,t_max,tolerance,verdict"


def test_decay_report_degenerate_and_ungated():
    tab = theorem_table("thm1")
    t = np.geomspace(1.0, 1e3, 40)
    fits = decay_report(t, {"V_x": np.zeros(40), "z": (1 + t) ** -1.0}, tab,
                        tolerances={"V_x": 0.1})
    by = {f.quantity: f for f in fits}
    assert by["V_x"].verdict == DEGENERATE and not by["V_x"].passed
    assert by["z"].verdict == "report" and not by["z"].gated
    assert not report_passed(fits)
