"""Scenario construction and the profiles -> solver -> perturbation -> decay chain."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .closure import ModelSpec, model_from_name
from .config import RunConfig
from .decay import decay_report, hypothesis_check, theorem_table
from .errors import DomainError, M1LabError, TailWarning
from .grid import HalfLineGrid, cumulative_integral, integrate
from .perturbation import (attach_time_derivatives, build_perturbation, norm_series,
                           zero_mass_check)
from .profiles import (DiffusionWaveSetup, bump_m0, compute_delta0, gaussian_phi0,
                       solve_diffusion_wave, verify_profile_decay)
from .solver import Scenario, auto_length, geometric_times, run

logger = logging.getLogger(__name__)


class PipelineError(M1LabError):
    """A module error tagged with the pipeline stage it came from."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def shape_function(shape, x, center, width):
    """Gaussian ``bump`` or its zero-mass derivative ``dbump``, both peaking at 1."""
    s = (np.asarray(x) - center) / width
    if shape == "none":
        return np.zeros_like(s)
    if shape == "bump":
        return np.exp(-s * s)
    if shape == "dbump":
        # -2 s exp(-s^2) has extrema +-sqrt(2/e) at s = -+1/sqrt(2)
        return -2.0 * s * np.exp(-s * s) / np.sqrt(2.0 / np.e)
    raise DomainError(f"unknown perturbation shape {shape!r}")


def build_model(cfg: RunConfig) -> ModelSpec:
    return model_from_name(cfg.model.name, alpha=cfg.model.alpha, gamma=cfg.model.gamma)


def perturbation_support(cfg: RunConfig) -> float:
    """Right end of the region where the initial data differ from the far field."""
    p, pr = cfg.perturbation, cfg.profile
    ends = [pr.phi0_center + 5.0 * pr.phi0_width, pr.m0_support]
    if p.v_shape != "none":
        ends.append(p.v_center + 5.0 * p.v_width)
    if p.u_shape != "none":
        ends.append(p.u_center + 5.0 * p.u_width)
    return max(ends)


def build_grid(cfg: RunConfig, model: ModelSpec) -> HalfLineGrid:
    if cfg.grid.length == "auto":
        length = auto_length(model, cfg.state.v_plus, cfg.run.t_end, perturbation_support(cfg),
                             factor=cfg.grid.length_factor)
    else:
        length = float(cfg.grid.length)
    return HalfLineGrid(float(length), int(cfg.grid.cells))


@dataclass
class InitialData:
    grid: HalfLineGrid
    v0: np.ndarray
    u0: np.ndarray
    phi0: np.ndarray
    m0: np.ndarray
    delta0: float


def initial_data(cfg: RunConfig, grid: HalfLineGrid, model: ModelSpec) -> InitialData:
    """Far-field ramp plus the configured bumps; ``delta0`` matches the zero-mass identity.

    The velocity starts as ``u_plus * int_0^x m0`` (the correction ``uhat`` at
    t = 0) plus the velocity bump, so the data meet the wall condition and
    the far field exactly.
    """
    p, x, dx = cfg.perturbation, grid.x, grid.dx
    v_plus, u_plus = cfg.state.v_plus, cfg.state.u_plus
    phi0 = gaussian_phi0(grid, cfg.profile.phi0_center, cfg.profile.phi0_width)
    m0 = bump_m0(grid, cfg.profile.m0_support)
    ramp = cumulative_integral(m0, dx)
    ramp[np.flatnonzero(m0)[-1] + 1:] = 1.0
    v0 = v_plus + p.v_amplitude * shape_function(p.v_shape, x, p.v_center, p.v_width)
    u0 = u_plus * ramp + p.u_amplitude * shape_function(p.u_shape, x, p.u_center, p.u_width)
    if cfg.profile.delta0 == "auto":
        delta0 = compute_delta0(v0, v_plus, phi0, u_plus, model.alpha, dx)
    else:
        delta0 = float(cfg.profile.delta0)
    return InitialData(grid, grid.field(v0), grid.field(u0), phi0, m0, float(delta0))


def snapshot_times(cfg: RunConfig):
    return geometric_times(cfg.run.t_end, per_decade=cfg.run.per_decade,
                           t_first=cfg.run.t_first)


@dataclass
class PipelineResult:
    config: RunConfig
    grid: HalfLineGrid
    data: InitialData
    bundles: list
    trajectory: object = None
    snapshots: list = field(default_factory=list)
    norms: object = None
    fits: list = field(default_factory=list)
    hypotheses: object = None
    zero_mass: np.ndarray | None = None
    tail_warnings: int = 0


def _stage(name, func, *args, **kw):
    try:
        return func(*args, **kw)
    except M1LabError as exc:
        raise PipelineError(name, exc) from exc


def run_profiles(cfg: RunConfig, times=None):
    model = build_model(cfg)
    grid = build_grid(cfg, model)
    data = initial_data(cfg, grid, model)
    setup = DiffusionWaveSetup(cfg.state.v_plus, data.delta0, data.phi0, model,
                               u_plus=cfg.state.u_plus, m0=data.m0)
    times = snapshot_times(cfg) if times is None else times
    bundles = _stage("profiles", solve_diffusion_wave, setup, grid, cfg.run.t_end, times,
                     growth=cfg.profile.growth)
    return model, grid, data, bundles


def profile_check(cfg: RunConfig) -> PipelineResult:
    """Diffusion-wave run fitted against the profile decay table."""
    model, grid, data, bundles = run_profiles(cfg)
    fits = _stage("decay", verify_profile_decay, bundles, cfg.state.v_plus, grid.dx,
                  window=cfg.window(), tolerances=cfg.tolerances())
    return PipelineResult(cfg, grid, data, bundles, fits=fits)


def simulate(cfg: RunConfig, progress=None) -> PipelineResult:
    """Full chain for one configuration."""
    cfg.validate()
    model, grid, data, bundles = run_profiles(cfg)
    times = np.array([b.t for b in bundles])
    scenario = Scenario(model=model, grid=grid, v0=data.v0, u0=data.u0,
                        v_plus=cfg.state.v_plus, u_plus=cfg.state.u_plus, t_end=cfg.run.t_end,
                        cfl=cfg.run.cfl, snapshot_times=times, theta=cfg.run.theta,
                        name=cfg.name)
    traj = _stage("solver", run, scenario, progress)
    res = PipelineResult(cfg, grid, data, bundles, trajectory=traj)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TailWarning)
        snaps = [_stage("perturbation", build_perturbation, s, b, model, grid.dx)
                 for s, b in zip(traj.states, bundles)]
    res.tail_warnings = sum(issubclass(w.category, TailWarning) for w in caught)
    res.zero_mass = np.array([zero_mass_check(s, b, grid.dx)
                              for s, b in zip(traj.states, bundles)])
    if len(snaps) >= 3:
        res.snapshots = _stage("perturbation", attach_time_derivatives, snaps, grid.dx)
        res.norms = norm_series(res.snapshots, grid.dx)
        first = res.snapshots[0]
        res.hypotheses = hypothesis_check(first.V, first.z, grid.x, model.alpha,
                                          cfg.state.u_plus)
        table = theorem_table(cfg.decay.theorem)
        tols = cfg.tolerances()
        pos = res.norms.times > 0.0
        res.fits = _stage("decay", decay_report, res.norms.times[pos],
                          {k: v[pos] for k, v in res.norms.values.items()}, table,
                          window=cfg.window(), tolerances=tols)
    else:
        res.snapshots = snaps
    return res
