"""Command-line entry point.

    m1lab simulate --preset m1-small --out runs/m1
    m1lab profile-check --preset lemma21
    m1lab closure-check --seed 3
    m1lab greens-check
    m1lab sweep --preset m1-small --preset psystem-faster --threads 2

Every command writes CSV/JSON files under ``--out`` and exits with 0 only
when all requested verdicts pass.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .closure import closure_identity_residual, eddington_chi
from .config import PRESETS, RunConfig, load_config, parse_config, preset
from .decay import series_name, theorem_table, write_report_csv
from .errors import M1LabError
from .greens import (compact_bump, j1_decay, kernel_scaling_report, write_kernel_report_csv)
from .grid import HalfLineGrid, write_columns_csv
from .pipeline import PipelineResult, profile_check, simulate
from .profiles import profile_norm_series
from .report import write_loglog_svg, write_manifest

logger = logging.getLogger("m1lab")


# ---------------------------------------------------------------- checks

def closure_check(seed=0, n_grid=200, n_samples=10_000) -> dict:
    """Closure identity on a (rho, u) grid and Eddington-factor bounds on samples."""
    rho, u = np.meshgrid(np.linspace(0.0, 10.0, n_grid), np.linspace(-1.0, 1.0, n_grid))
    identity = float(np.max(closure_identity_residual(rho, u)))
    rng = np.random.default_rng(seed)
    samples = np.sort(np.concatenate([np.linspace(0.0, 1.0, n_samples // 2),
                                      rng.uniform(0.0, 1.0, n_samples - n_samples // 2)]))
    chi = np.asarray(eddington_chi(samples))
    in_bounds = bool(np.all((chi >= 1.0 / 3.0) & (chi <= 1.0)))
    monotone = bool(np.all(np.diff(chi) >= 0.0))
    return {
        "identity_max_residual": identity,
        "identity_pass": identity <= 1e-12,
        "chi_bounds_pass": in_bounds,
        "chi_monotone_pass": monotone,
        "chi_min": float(chi.min()),
        "chi_max": float(chi.max()),
        "samples": int(samples.size),
        "seed": int(seed),
    }


def j1_setup(D=1.0 / 3.0, t_end=1e4, half_width=2.0):
    """Compactly supported data far enough from the wall that the images stay negligible."""
    reach = 10.0 * np.sqrt(D * t_end)
    center = reach + 10.0 * half_width
    grid = HalfLineGrid(2.0 * center, int(round(4.0 * center)))
    return grid, compact_bump(grid, center, half_width)


def greens_check(D=1.0 / 3.0) -> dict:
    fits = kernel_scaling_report(D=D)
    grid, data = j1_setup(D)
    j1 = j1_decay(data, grid, np.geomspace(1e2, 1e4, 33), D=D)
    return {"kernel": fits, "j1": j1}


# ---------------------------------------------------------------- outputs

def _gated_passed(fits) -> bool:
    return all(f.passed for f in fits if f.gated)


def _fits_table(fits) -> str:
    lines = [f"{'quantity':14s} {'expected':>9s} {'fitted':>9s} {'R2':>7s}  verdict"]
    for f in fits:
        exp = "" if f.expected is None else f"{f.expected:+.4f}"
        lines.append(f"{f.quantity:14s} {exp:>9s} {f.exponent:+9.4f} {f.r2:7.4f}  {f.verdict}")
    return "\n".join(lines)


def write_simulation_outputs(res: PipelineResult, out):
    os.makedirs(out, exist_ok=True)
    cfg = res.config
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    traj = res.trajectory
    traj.write_diagnostics_csv(os.path.join(out, "diagnostics.csv"))
    if cfg.output.snapshots:
        traj.write_snapshots_csv(os.path.join(out, "snapshots.csv"))
    write_columns_csv(os.path.join(out, "zero_mass.csv"),
                      {"t": traj.times, "zero_mass": res.zero_mass})
    extra = {
        "name": cfg.name,
        "grid": {"length": res.grid.length, "cells": res.grid.cells},
        "delta0": res.data.delta0,
        "steps": traj.steps,
        "seed": cfg.run.seed,
        "tail_warnings": res.tail_warnings,
        "max_mass_drift": float(np.max(np.abs(traj.mass_drift()))),
        "max_zero_mass": float(np.max(np.abs(res.zero_mass))),
    }
    if res.norms is not None:
        res.norms.write_csv(os.path.join(out, "norms.csv"))
        write_report_csv(os.path.join(out, "decay_report.csv"), res.fits)
        h = res.hypotheses
        extra["hypotheses"] = {
            "u_plus_zero": h.u_plus_zero, "l1_data": h.l1_data, "zero_mass": h.zero_mass,
            "zero_mass_value": h.zero_mass_value, "w0_l1": h.w0_l1,
            "small_data": h.small_data, "applicable": h.applicable,
            "requested_theorem_satisfied": h.satisfied(cfg.decay.theorem),
        }
        extra["verdict"] = "pass" if _gated_passed(res.fits) else "fail"
        extra["N_max"] = float(res.norms.N[-1])
        if cfg.output.svg:
            table = theorem_table(cfg.decay.theorem)
            guides = {series_name(q, k, j, n): float(e) for (q, k, j, n), e in table.entries.items()}
            names = [series_name(q, k, j) for q, k, j in (("V", 0, 0), ("V", 1, 0), ("z", 0, 0))]
            write_loglog_svg(os.path.join(out, "decay.svg"), res.norms.times,
                             {n: res.norms[n] for n in names},
                             guides={n: guides[n] for n in names if n in guides},
                             title=f"{cfg.name}: perturbation norms")
    write_manifest(os.path.join(out, "manifest.json"), cfg.digest(), extra)


def write_profile_outputs(res: PipelineResult, out):
    os.makedirs(out, exist_ok=True)
    cfg = res.config
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    write_report_csv(os.path.join(out, "decay_report.csv"), res.fits)
    times, series = profile_norm_series(res.bundles, cfg.state.v_plus, res.grid.dx)
    cols = {"t": times}
    cols.update(series)
    write_columns_csv(os.path.join(out, "profile_norms.csv"), cols)
    if cfg.output.svg:
        names = ["vbar", "vbar_x", "vbar[Linf]"]
        table = theorem_table("lemma2.1")
        guides = {series_name(q, k, j, n): float(e) for (q, k, j, n), e in table.entries.items()}
        write_loglog_svg(os.path.join(out, "profile_decay.svg"), times,
                         {n: series[n] for n in names}, guides={n: guides[n] for n in names},
                         title=f"{cfg.name}: diffusion-wave norms")
    write_manifest(os.path.join(out, "manifest.json"), cfg.digest(),
                   {"name": cfg.name, "grid": {"length": res.grid.length,
                                               "cells": res.grid.cells},
                    "delta0": res.data.delta0,
                    "verdict": "pass" if _gated_passed(res.fits) else "fail"})


# ---------------------------------------------------------------- commands

def _apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """``section.key=value`` overrides, re-parsed through the INI reader."""
    if not pairs:
        return cfg
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(cfg.to_ini())
    for item in pairs:
        key, eq, value = item.partition("=")
        sec, _, opt = key.partition(".")
        if not eq or not sec or not opt:
            raise M1LabError(f"override {item!r} is not section.key=value")
        if not cp.has_section(sec):
            raise M1LabError(f"unknown config section [{sec}]")
        cp[sec][opt] = value
    buf = io.StringIO()
    cp.write(buf)
    return parse_config(buf.getvalue())


def resolve_config(args, default_preset=None) -> RunConfig:
    if args.config and args.preset:
        raise M1LabError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset or default_preset:
        cfg = preset(args.preset or default_preset)
    else:
        raise M1LabError("a --config or --preset is required")
    cfg = _apply_overrides(cfg, getattr(args, "set", None))
    if args.seed is not None:
        cfg.run.seed = args.seed
    return cfg.validate()


def _out_dir(args, cfg: RunConfig | None, fallback):
    if args.out:
        return args.out
    return cfg.output.directory if cfg is not None else fallback


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args, cfg, "m1lab-out")
    res = simulate(cfg, progress=None)
    write_simulation_outputs(res, out)
    if res.norms is None:
        print("fewer than 3 snapshots: no decay report")
        return 0
    print(_fits_table(res.fits))
    ok = _gated_passed(res.fits)
    print(f"{cfg.name}: {'PASS' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_profile_check(args) -> int:
    cfg = resolve_config(args, default_preset="lemma21")
    out = _out_dir(args, cfg, "lemma21-out")
    res = profile_check(cfg)
    write_profile_outputs(res, out)
    print(_fits_table(res.fits))
    ok = _gated_passed(res.fits)
    print(f"{cfg.name}: {'PASS' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_closure_check(args) -> int:
    out = args.out or "closure-check"
    os.makedirs(out, exist_ok=True)
    summary = closure_check(seed=args.seed or 0)
    summary["passed"] = bool(summary["identity_pass"] and summary["chi_bounds_pass"]
                             and summary["chi_monotone_pass"])
    with open(os.path.join(out, "closure_check.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary["passed"] else 1


def cmd_greens_check(args) -> int:
    out = args.out or "greens-check"
    os.makedirs(out, exist_ok=True)
    result = greens_check()
    write_kernel_report_csv(os.path.join(out, "kernel_scaling.csv"), result["kernel"])
    j1 = result["j1"]
    ok = all(f.passed for f in result["kernel"]) and j1.passed
    summary = {
        "kernel": [{"k": f.k, "j": f.j, "norm": f.norm, "expected": f.expected,
                    "fitted": f.exponent, "verdict": f.verdict} for f in result["kernel"]],
        "j1": {"expected": j1.expected, "fitted": j1.exponent, "r2": j1.r2,
               "t_min": j1.t_min, "t_max": j1.t_max, "verdict": j1.verdict},
        "passed": ok,
    }
    with open(os.path.join(out, "greens_check.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(_fits_table(result["kernel"] + [j1]))
    return 0 if ok else 1


def _sweep_one(cfg: RunConfig, out):
    try:
        res = simulate(cfg)
        write_simulation_outputs(res, out)
        return cfg.name, out, (_gated_passed(res.fits) if res.norms is not None else True), ""
    except M1LabError as exc:
        return cfg.name, out, False, str(exc)


def cmd_sweep(args) -> int:
    configs = [load_config(p) for p in args.config or []]
    configs += [preset(n) for n in args.preset or []]
    if not configs:
        raise M1LabError("sweep needs at least one --config or --preset")
    root = args.out or "sweep-out"
    os.makedirs(root, exist_ok=True)
    jobs = []
    for i, cfg in enumerate(configs):
        cfg = _apply_overrides(cfg, args.set)
        if args.seed is not None:
            cfg.run.seed = args.seed
        jobs.append((cfg, os.path.join(root, f"{i:02d}-{cfg.name}")))
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(lambda job: _sweep_one(*job), jobs))
    with open(os.path.join(root, "sweep.csv"), "w") as fh:
        fh.write("scenario,directory,verdict,error\n")
        for name, out, ok, err in results:
            fh.write(f"{name},{out},{'pass' if ok else 'fail'},{err.replace(',', ';')}\n")
    for name, out, ok, err in results:
        print(f"{name:20s} {'PASS' if ok else 'FAIL'} {out} {err}")
    return 0 if all(r[2] for r in results) else 1


def cmd_show_config(args) -> int:
    cfg = resolve_config(args)
    sys.stdout.write(cfg.to_ini())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="m1lab", description="Damped p-system / M1 decay lab")
    sub = ap.add_subparsers(dest="command", required=True)
    names = sorted(PRESETS)
    for cmd, func, helptext in (
        ("simulate", cmd_simulate, "full profiles -> solver -> decay pipeline"),
        ("profile-check", cmd_profile_check, "diffusion-wave decay fits"),
        ("show-config", cmd_show_config, "print a resolved config as INI"),
    ):
        p = sub.add_parser(cmd, parents=[common], help=helptext)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--preset", choices=names)
        p.set_defaults(func=func)
    p = sub.add_parser("closure-check", parents=[common], help="closure identity and bounds")
    p.set_defaults(func=cmd_closure_check)
    p = sub.add_parser("greens-check", parents=[common], help="heat-kernel scaling and J1 decay")
    p.set_defaults(func=cmd_greens_check)
    p = sub.add_parser("sweep", parents=[common], help="run several scenarios concurrently")
    p.add_argument("--config", action="append", help="INI config file (repeatable)")
    p.add_argument("--preset", choices=names, action="append", help="preset name (repeatable)")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except M1LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
