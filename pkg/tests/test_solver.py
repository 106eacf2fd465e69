import numpy as np
import pytest

from m1lab.closure import gamma_law_model, m1_model
from m1lab.errors import AdmissibilityError, CFLError, DomainError, StepFailure, VacuumError
from m1lab.grid import HalfLineGrid, StateField, lp_norm
from m1lab.solver import (FarField, Scenario, auto_length, damping_average, geometric_times,
                          max_wave_speed, run, spectral_radius, step)


def smooth_scenario(n=256, t_end=5.0, theta=1.0, model=None, u_plus=0.0):
    g = HalfLineGrid(40.0, n)
    v0 = 1.0 + 0.01 * np.exp(-(g.x - 15.0) ** 2 / 4.0)
    u0 = 0.01 * np.exp(-(g.x - 20.0) ** 2 / 4.0) + u_plus * (1.0 - np.exp(-g.x**2))
    return Scenario(model or m1_model(), g, v0, u0, 1.0, u_plus, t_end,
                    snapshot_times=[0.0, t_end], theta=theta)


@pytest.mark.parametrize("model", [m1_model(), gamma_law_model(1.4, alpha=0.5)])
def test_equilibrium_preserved_exactly(model):
    g = HalfLineGrid(20.0, 64)
    tr = run(Scenario(model, g, np.full(64, 1.3), np.zeros(64), 1.3, 0.0, 10.0,
                      snapshot_times=[0.0, 5.0, 10.0]))
    assert tr.steps > 20
    for s in tr.states:
        assert np.all(s.v == 1.3) and np.all(s.u == 0.0)


def test_uniform_far_field_follows_damping_ode():
    g = HalfLineGrid(50.0, 200)
    u0 = 0.05 * np.ones(200)
    u0[:8] = 0.05 * np.sin(0.5 * np.pi * g.x[:8] / g.x[8])
    tr = run(Scenario(m1_model(alpha=0.7), g, np.ones(200), u0, 1.0, 0.05, 4.0,
                      snapshot_times=[4.0]))
    s = tr.states[-1]
    # information from the wall travels at most ~0.6 * 4 plus the stencil
    far = g.x > 15.0
    np.testing.assert_allclose(s.u[far], 0.05 * np.exp(-0.7 * 4.0), rtol=1e-13)
    np.testing.assert_allclose(s.v[far], 1.0, rtol=1e-14)


def test_damping_average():
    assert damping_average(1.0, 0.0) == 1.0
    x = 0.05
    assert damping_average(2.0, 0.05) == pytest.approx(np.sinh(x) / x, rel=1e-15)
    assert 0.0 < damping_average(1.0, 1e-3) - 1.0 < 1e-7


def test_mass_budget_on_small_grid():
    rng = np.random.default_rng(1)
    g = HalfLineGrid(16.0, 16)
    v0 = 1.0 + 0.2 * rng.random(16)
    u0 = 0.2 * (rng.random(16) - 0.5)
    v0[-1], u0[-1] = 1.0, 0.1
    tr = run(Scenario(m1_model(), g, v0, u0, 1.0, 0.1, 30.0, snapshot_times=[30.0]))
    assert np.max(np.abs(tr.mass_drift())) < 1e-13


def test_cfl_violation():
    g = HalfLineGrid(10.0, 32)
    s = StateField(np.ones(32), np.zeros(32))
    m = m1_model()
    dt = 2.0 * g.dx / max_wave_speed(s, m)
    with pytest.raises(CFLError):
        step(s, dt, 0.0, m, FarField(1.0, 0.0, 1.0), g.dx, cfl=1.0)


def test_vacuum_and_admissibility():
    g = HalfLineGrid(10.0, 32)
    v0 = np.ones(32)
    v0[5] = 0.0
    with pytest.raises(VacuumError):
        run(Scenario(m1_model(), g, v0, np.zeros(32), 1.0, 0.0, 1.0))
    u0 = np.zeros(32)
    u0[5] = 1.5
    with pytest.raises(AdmissibilityError):
        run(Scenario(m1_model(), g, np.ones(32), u0, 1.0, 0.0, 1.0))
    # a violent compression drives v through zero and is reported with its time
    u0 = -20.0 * (g.x - 5.0) * np.exp(-(g.x - 5.0) ** 2)
    with pytest.raises(StepFailure) as exc:
        run(Scenario(gamma_law_model(1.4), g, np.ones(32), u0, 1.0, 0.0, 5.0))
    assert isinstance(exc.value.cause, VacuumError)


def test_scenario_validation():
    g = HalfLineGrid(10.0, 32)
    base = dict(model=m1_model(), grid=g, v0=np.ones(32), u0=np.zeros(32), v_plus=1.0,
                u_plus=0.0, t_end=1.0)
    with pytest.raises(DomainError):
        run(Scenario(**base, cfl=1.2))
    with pytest.raises(DomainError):
        run(Scenario(**{**base, "v_plus": 1.1}))
    with pytest.raises(DomainError):
        run(Scenario(**base, snapshot_times=[0.5, 0.2]))
    with pytest.raises(DomainError):
        run(Scenario(**base, snapshot_times=[2.0]))


def test_zero_end_time():
    sc = smooth_scenario(t_end=0.0)
    sc.snapshot_times = np.array([0.0])
    tr = run(sc)
    assert tr.steps == 0 and tr.times == [0.0]
    np.testing.assert_array_equal(tr.states[0].v, sc.v0)


def test_deterministic():
    a = run(smooth_scenario(128, 2.0))
    b = run(smooth_scenario(128, 2.0))
    for sa, sb in zip(a.states, b.states):
        assert np.array_equal(sa.v, sb.v) and np.array_equal(sa.u, sb.u)
    assert a.diag_dt == b.diag_dt


def test_second_order_self_convergence():
    sols = {n: run(smooth_scenario(n)).states[-1] for n in (128, 256, 1024)}
    ref = sols[1024]

    def err(n):
        k = 1024 // n
        g = HalfLineGrid(40.0, n)
        return (lp_norm(sols[n].v - ref.v.reshape(-1, k).mean(axis=1), g.dx, 2)
                + lp_norm(sols[n].u - ref.u.reshape(-1, k).mean(axis=1), g.dx, 2))

    assert err(128) / err(256) >= 3.5


def test_m1_velocity_stays_admissible():
    sc = smooth_scenario(256, 20.0, u_plus=0.3)
    tr = run(sc)
    for s in tr.states:
        assert np.max(np.abs(s.u)) <= 1.0
    assert tr.states[-1].u[-1] == pytest.approx(0.3 * np.exp(-20.0), rel=1e-10)


def test_spectral_radius_limits():
    m = gamma_law_model(2.0)
    assert spectral_radius(1.0, 0.0, m) == pytest.approx(np.sqrt(2.0))
    # the M1 flux term vanishes at u = 0, leaving sqrt(-p')
    assert spectral_radius(1.0, 0.0, m1_model()) == pytest.approx(np.sqrt(1.0 / 3.0))


def test_auto_length_and_times():
    assert auto_length(m1_model(), 1.0, 300.0, 5.0) == pytest.approx(10.0 * 10.0 + 5.0)
    ts = geometric_times(1000.0, per_decade=4, t_first=1.0)
    assert ts[0] == 0.0 and ts[1] == 1.0 and ts[-1] == 1000.0 and ts.size == 14
    np.testing.assert_allclose(np.diff(np.log10(ts[1:])), 0.25)
    assert list(geometric_times(0.0)) == [0.0]


def test_csv_outputs(tmp_path):
    tr = run(smooth_scenario(64, 1.0))
    tr.write_diagnostics_csv(tmp_path / "d.csv")
    tr.write_snapshots_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,x,v,u" and len(lines) == 1 + 2 * 64
    assert (tmp_path / "d.csv").read_text().startswith("t,dt,mass,max_speed")
