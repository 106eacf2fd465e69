import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf

from m1lab.closure import gamma_law_model, m1_model
from m1lab.errors import DomainError
from m1lab.greens import (KERNEL_CASES, HeatKernel, compact_bump, diffusivity,
                          gaussian_derivative, j1_decay, kernel, kernel_norm_scaling,
                          kernel_scaling_report, propagate_initial, write_kernel_report_csv)
from m1lab.grid import HalfLineGrid, integrate


def test_diffusivity():
    assert diffusivity(m1_model(), 1.0) == pytest.approx(1.0 / 3.0)
    assert diffusivity(gamma_law_model(2.0, alpha=4.0), 1.0) == pytest.approx(0.5)


def test_kernel_mass_is_erf():
    # int_0^inf G(x, t; y) dx = erf(y / sqrt(4 D t))
    for y, t, D in ((0.5, 1.0, 1.0), (3.0, 2.0, 0.3), (1.0, 10.0, 1.0 / 3.0)):
        mass, _ = quad(lambda x: kernel(x, t, y, D), 0.0, np.inf)
        assert mass == pytest.approx(erf(y / np.sqrt(4.0 * D * t)), abs=1e-10)


def test_kernel_symmetric_and_wall_zero():
    x = np.linspace(0.0, 5.0, 11)
    np.testing.assert_allclose(kernel(x, 0.7, 2.0), kernel(2.0, 0.7, x), rtol=1e-14)
    assert kernel(0.0, 1.3, 2.0) == 0.0
    assert kernel(2.0, 1.3, 0.0) == 0.0


def test_kernel_semigroup():
    x, y, s, t = 1.2, 2.5, 0.4, 0.9
    val, _ = quad(lambda w: kernel(x, t, w) * kernel(w, s, y), 0.0, np.inf)
    assert val == pytest.approx(kernel(x, s + t, y), rel=1e-9)


def test_kernel_errors():
    with pytest.raises(DomainError):
        kernel(1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        kernel(1.0, 1.0, 1.0, D=-1.0)
    with pytest.raises(DomainError):
        HeatKernel(0.0)
    assert HeatKernel(1.0)(1.0, 1.0, 2.0) == kernel(1.0, 1.0, 2.0)


def test_gaussian_derivative_matches_finite_differences():
    x = np.linspace(-3.0, 3.0, 13)
    t, D, h = 0.8, 0.5, 1e-4
    g = lambda xx, tt: gaussian_derivative(xx, tt, 0, 0, D)
    fx = (g(x + h, t) - g(x - h, t)) / (2 * h)
    ft = (g(x, t + h) - g(x, t - h)) / (2 * h)
    np.testing.assert_allclose(gaussian_derivative(x, t, 1, 0, D), fx, atol=1e-7)
    np.testing.assert_allclose(gaussian_derivative(x, t, 0, 1, D), ft, atol=1e-7)
    with pytest.raises(DomainError):
        gaussian_derivative(x, 0.0)


@pytest.mark.parametrize("k, j, p, expected", [
    (0, 0, 2, -0.25), (1, 0, 1, -0.5), (0, 1, 1, -1.0), (0, 0, np.inf, -0.5),
    (0, 0, 1, 0.0), (1, 1, 1, -1.5),
])
def test_kernel_scaling_examples(k, j, p, expected):
    fit = kernel_norm_scaling(k, j, p, np.geomspace(1.0, 1e3, 25))
    assert fit.expected == expected
    assert abs(fit.gap) <= 0.02 and fit.passed


def test_kernel_scaling_errors(tmp_path):
    with pytest.raises(DomainError):
        kernel_norm_scaling(2, 1, 2, np.geomspace(1.0, 1e3, 25))
    with pytest.raises(DomainError):
        kernel_norm_scaling(0, 0, 2, np.geomspace(1.0, 10.0, 25))
    fits = kernel_scaling_report(cases=KERNEL_CASES[:2])
    write_kernel_report_csv(tmp_path / "k.csv", fits)
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "k,j,p,expected,fitted" and lines[1].startswith("0,0,2,-0.25,")


def test_propagate_identity_at_zero_and_errors():
    g = HalfLineGrid(20.0, 80)
    data = compact_bump(g, 10.0, 2.0)
    np.testing.assert_array_equal(propagate_initial(data, g, 0.0), data)
    with pytest.raises(DomainError):
        propagate_initial(data, g, -1.0)
    with pytest.raises(DomainError):
        propagate_initial(data[:-1], g, 1.0)
    with pytest.raises(DomainError):
        compact_bump(g, 10.0, 0.01)


def test_propagate_narrow_data_is_kernel():
    # a one-cell spike of unit mass propagates as the kernel itself
    g = HalfLineGrid(40.0, 4000)
    data = np.zeros(g.cells)
    i = 1000
    data[i] = 1.0 / g.dx
    out = propagate_initial(data, g, 2.0)
    np.testing.assert_allclose(out, kernel(g.x, 2.0, g.x[i]), rtol=1e-12, atol=1e-300)


def test_propagate_constant_data_is_erf():
    g = HalfLineGrid(10.0, 2000)
    out = propagate_initial(np.ones(g.cells), g, 1.0)
    # the tail correction extends the data to infinity
    np.testing.assert_allclose(out, erf(g.x / 2.0), atol=2e-6)


def test_propagate_conserves_mass_away_from_wall():
    g = HalfLineGrid(200.0, 2000)
    data = compact_bump(g, 100.0, 3.0)
    out = propagate_initial(data, g, 10.0)
    assert integrate(out, g.dx) == pytest.approx(integrate(data, g.dx), rel=1e-8)


def test_j1_short_run():
    g = HalfLineGrid(200.0, 800)
    data = compact_bump(g, 100.0, 2.0)
    fit = j1_decay(data, g, np.geomspace(10.0, 100.0, 12), D=1.0, tolerance=0.05)
    assert fit.quantity == "J1" and fit.r2 > 0.999
    assert abs(fit.gap) <= 0.05
