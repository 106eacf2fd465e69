import warnings

import numpy as np
import pytest

from m1lab.closure import m1_model
from m1lab.errors import AdmissibilityError, DomainError, TailWarning, VacuumError
from m1lab.grid import (HalfLineGrid, StateField, cumulative_integral, ddx, integrate,
                        integrate_tail, lp_norm, norms, read_columns_csv, tail_integral,
                        write_columns_csv)


def test_grid_geometry():
    g = HalfLineGrid(10.0, 20)
    assert g.dx == 0.5
    assert g.x[0] == 0.25 and g.x[-1] == 9.75
    with pytest.raises(ValueError):
        g.x[0] = 1.0


@pytest.mark.parametrize("length, cells", [(0.0, 10), (-1.0, 10), (1.0, 4), (1.0, 10.5)])
def test_grid_rejects(length, cells):
    with pytest.raises(DomainError):
        HalfLineGrid(length, cells)


def test_field_validation():
    g = HalfLineGrid(1.0, 8)
    with pytest.raises(DomainError):
        g.field(np.zeros(7))
    with pytest.raises(DomainError):
        g.field(np.full(8, np.inf))
    f = g.sample(np.sin)
    assert not f.flags.writeable


def test_state_validation():
    m = m1_model()
    with pytest.raises(VacuumError):
        StateField(np.array([1.0, 0.0]), np.zeros(2)).validate()
    with pytest.raises(AdmissibilityError):
        StateField(np.ones(2), np.array([0.0, 1.5])).validate(m)
    with pytest.raises(DomainError):
        StateField(np.ones(2), np.zeros(3)).validate()


def _ddx_error(n, left, right, f, df, length=3.0):
    g = HalfLineGrid(length, n)
    return np.max(np.abs(ddx(f(g.x), g.dx, left, right) - df(g.x)))


@pytest.mark.parametrize("left, right, f, df", [
    ("even", "extrapolate", np.cos, lambda x: -np.sin(x)),
    ("odd", "extrapolate", np.sin, np.cos),
    ("extrapolate", np.cos(3.0), np.cos, lambda x: -np.sin(x)),
    (1.0, "extrapolate", np.exp, np.exp),
])
def test_ddx_second_order(left, right, f, df):
    e1 = _ddx_error(64, left, right, f, df)
    e2 = _ddx_error(128, left, right, f, df)
    assert e1 / e2 > 3.5


def test_ddx_dirichlet_face_exact_on_quadratics():
    g = HalfLineGrid(2.0, 16)
    f = 3.0 + 2.0 * g.x - g.x**2
    d = ddx(f, g.dx, left=3.0, right=3.0 + 4.0 - 4.0)
    np.testing.assert_allclose(d, 2.0 - 2.0 * g.x, atol=1e-12)


def test_ddx_needs_cells():
    with pytest.raises(DomainError):
        ddx(np.zeros(3), 1.0)


def test_quadrature_second_order():
    for n in (50, 100):
        g = HalfLineGrid(np.pi, n)
        err = abs(integrate(np.sin(g.x), g.dx) - 2.0)
        assert err < 1.0 / n**2
    g = HalfLineGrid(np.pi, 100)
    ci = cumulative_integral(np.sin(g.x), g.dx)
    np.testing.assert_allclose(ci, 1.0 - np.cos(g.x), atol=2e-4)
    ti = tail_integral(np.sin(g.x), g.dx, tail_tol=1.0)
    np.testing.assert_allclose(ti + ci, integrate(np.sin(g.x), g.dx), atol=1e-14)


def test_tail_warning():
    g = HalfLineGrid(1.0, 10)
    with pytest.warns(TailWarning):
        tail_integral(np.ones(10), g.dx)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tail_integral(np.exp(-50.0 * g.x), g.dx, tail_tol=1e-8)


def test_integrate_tail_interpolates():
    g = HalfLineGrid(10.0, 1000)
    f = np.exp(-g.x)
    assert integrate_tail(f, g.dx, 2.0, tail_tol=1e-3) == pytest.approx(np.exp(-2.0) - np.exp(-10.0),
                                                                          rel=1e-4)


def test_norms():
    f = np.array([1.0, -2.0, 2.0, 0.0])
    n = norms(f, 0.5)
    assert n == {"L1": 2.5, "L2": np.sqrt(4.5), "Linf": 2.0}
    assert lp_norm(f, 0.5, 2) == np.sqrt(4.5)
    assert lp_norm(f, 0.5, np.inf) == 2.0
    assert lp_norm(f, 0.5, "inf") == 2.0


def test_csv_round_trip(tmp_path):
    cols = {"x": np.linspace(0, 1, 5), "value": np.array([1 / 3, 2e-300, -1.0, np.pi, 0.0])}
    p = tmp_path / "f.csv"
    write_columns_csv(p, cols)
    back = read_columns_csv(p)
    for k in cols:
        np.testing.assert_array_equal(back[k], cols[k])
