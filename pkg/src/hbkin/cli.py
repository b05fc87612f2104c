"""Batch command-line driver.

Commands: simulate | epsilon-study | validate-dispersion | sigma-coll |
selftest.  Exit codes: 0 ok, 2 configuration error, 3 runtime constraint
violation (partial output is still written).  Every report path writes
delimited data plus rendered PNG figures (disable with plots = false).
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import figures
from .collision import CollisionOperator, sigma_coll_map, omega_tilde_span
from .config import (
    RunConfig,
    build_dispersion,
    build_grid,
    build_initial,
    build_params,
    load_config,
)
from .diagnostics import conservation_report, epsilon_study
from .errors import KineticsError
from .evolution import IntegratorConfig, dt_stability_bound, evolve
from .io import write_report_json, write_snapshot, write_trajectory_csv
from .lattice import DispersionRelation, TorusGrid

log = logging.getLogger(__name__)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="hbkin",
        description="Kinetic solver and property checks for spin-1/2 lattice fermions. "
        "Note: per-point collision cost grows as N^(2d); d=3 is feasible only at small N.",
    )
    ap.add_argument("command", choices=[
        "simulate", "epsilon-study", "validate-dispersion", "sigma-coll", "selftest",
    ])
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--output", default=None, help="output directory (overrides config)")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads, 0 = auto (env HBK_THREADS as fallback)")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    return ap


def _operator(cfg):
    grid = build_grid(cfg)
    disp = build_dispersion(cfg, grid)
    return grid, disp, CollisionOperator(disp, build_params(cfg))


def cmd_simulate(cfg, outdir):
    grid, disp, op = _operator(cfg)
    W0 = build_initial(cfg, grid)
    icfg = IntegratorConfig(dt=cfg.dt, t_end=cfg.t_end, scheme=cfg.scheme,
                            truncation=cfg.truncation, record_every=cfg.record_every)
    log.info("dt stability heuristic: %.4g (configured dt %.4g)", dt_stability_bound(op), cfg.dt)
    traj = evolve(W0, op, icfg)

    write_trajectory_csv(os.path.join(outdir, "trajectory.csv"), traj, cfg.to_dict())
    snapdir = os.path.join(outdir, "snapshots")
    os.makedirs(snapdir, exist_ok=True)
    for i, Wf in enumerate(traj.fields):
        write_snapshot(os.path.join(snapdir, f"state_{i:06d}.hbwf"), Wf)
    report = conservation_report(traj, tolerance=1e-8)
    write_report_json(os.path.join(outdir, "report.json"), {
        "config": cfg.to_dict(),
        "status": traj.status,
        "conservation": report.to_dict(),
        "final_time": traj.times[-1],
        "final_fermi_residual": traj.fermi_residual[-1],
        "final_herm_residual": traj.herm_residual[-1],
    })
    if cfg.plots:
        figures.save_trajectory_figure(traj, os.path.join(outdir, "trajectory.png"))
    if traj.status != "completed":
        print(f"constraint violated at t={traj.times[-1]:g}; partial output in {outdir}")
        return 3
    print(f"simulate: {len(traj)} frames -> {outdir}")
    return 0


def cmd_epsilon_study(cfg, outdir):
    section = cfg.extra.get("epsilon_study", {})
    op_name = section.get("op", "h_eff")
    if "pairs" in section:
        schedule = [(int(N), float(e)) for N, e in section["pairs"]]
        if cfg.initial_kind in ("diagonal-file", "field-file"):
            raise KineticsError(
                "config-error",
                "epsilon_study.pairs: paired refinement needs resamplable initial data "
                "(constant or polarized-bump)",
            )

        def profile(grid):
            sub = RunConfig(**{**cfg.__dict__, "d": grid.d, "N": grid.N})
            return build_initial(sub, grid)

        report = epsilon_study(
            profile, schedule, op_name, d=cfg.d,
            dispersion=(cfg.dispersion_kind, cfg.dispersion_c),
            backend=cfg.backend, kappa=cfg.kappa,
        )
    else:
        eps_list = [float(e) for e in section.get("epsilons", [])]
        if not eps_list:
            raise KineticsError("config-error", "epsilon_study: need pairs=... or epsilons=...")
        grid, disp, _ = _operator(cfg)
        W = build_initial(cfg, grid)
        report = epsilon_study(W, eps_list, op_name, disp=disp,
                               backend=cfg.backend, kappa=cfg.kappa)

    payload = {"config": cfg.to_dict(), "report": report.to_dict()}
    write_report_json(os.path.join(outdir, "epsilon_study.json"), payload)
    with open(os.path.join(outdir, "epsilon_study.csv"), "w") as fh:
        fh.write("pair,increment\n")
        for p, v in report.metadata["increments"]:
            fh.write(f"{p},{v:.17g}\n")
    if cfg.plots:
        figures.save_epsilon_figure(report, os.path.join(outdir, "epsilon_study.png"))
    print(f"epsilon-study: verdict {report.verdict} -> {outdir}")
    return 0


def cmd_sigma_coll(cfg, outdir):
    grid, disp, op = _operator(cfg)
    section = cfg.extra.get("sigma_coll", {})
    sigma = tuple(section.get("sigma", (1, 1, -1, -1)))
    k_points = [int(k) for k in section.get("k1", [0])]
    eps = cfg.epsilon
    span = omega_tilde_span(disp, sigma)
    tail = section.get("alpha_max", None)
    m = float(tail) if tail is not None else span + 2.0 * eps / (np.pi * 6e-4)
    d_alpha = eps / 4.0
    alphas = np.arange(-m, m + 0.5 * d_alpha, d_alpha)

    curves, integrals = [], []
    for k1 in k_points:
        vals = sigma_coll_map(k1, alphas, sigma, disp, eps)
        curves.append((f"k1={k1}", vals))
        integrals.append(float(np.trapezoid(vals, alphas)))

    path = os.path.join(outdir, "sigma_coll.csv")
    with open(path, "w") as fh:
        fh.write("# integrals (trapezoid): " +
                 ", ".join(f"k1={k}: {v:.17g}" for k, v in zip(k_points, integrals)) + "\n")
        fh.write("alpha," + ",".join(f"mass_k{k}" for k in k_points) + "\n")
        for i, a in enumerate(alphas):
            fh.write(f"{a:.17g}," + ",".join(f"{c[1][i]:.17g}" for c in curves) + "\n")
    write_report_json(os.path.join(outdir, "sigma_coll.json"), {
        "config": cfg.to_dict(),
        "sigma": list(sigma),
        "alpha_window": m,
        "alpha_step": d_alpha,
        "integrals": dict(zip(map(str, k_points), integrals)),
        "omega_combination_span": span,
    })
    if cfg.plots:
        figures.save_sigma_coll_figure(alphas, curves, os.path.join(outdir, "sigma_coll.png"),
                                       integrals)
    print(f"sigma-coll: integrals {integrals} -> {outdir}")
    return 0


def cmd_validate_dispersion(cfg, outdir):
    from . import dispersion_validation as dv
    from scipy import special

    grid, disp, _ = _operator(cfg)
    section = cfg.extra.get("validate", {})
    payload = {"config": cfg.to_dict()}

    if cfg.dispersion_kind == "nearest-neighbor":
        axis_N = int(section.get("axis_N", 512))
        axis = DispersionRelation.nearest_neighbor(TorusGrid(1, axis_N))
        t_max = float(section.get("t_max", min(40.0, axis_N / 4)))
        fit = dv.pt_l3_decay(axis, t_max, samples=int(section.get("samples", 48)),
                             t_min=float(section.get("t_min", 5.0)), d_power=cfg.d)
    else:
        t_max = float(section.get("t_max", grid.N / 4))
        fit = dv.pt_l3_decay(disp, t_max, samples=int(section.get("samples", 48)),
                             t_min=float(section.get("t_min", 1.0)))
    bound = 3.0 * cfg.d / 7.0
    payload["propagator_decay"] = {
        "fitted_exponent": fit.fitted_exponent,
        "fitted_constant": fit.fitted_constant,
        "reference_exponent": bound,
        "satisfies_reference": fit.fitted_exponent >= bound,
    }

    r = np.linspace(0.0, 200.0, 4001)
    c1 = float(np.max(np.abs(special.j0(r)) * np.sqrt(1.0 + r)))
    payload["phase_factor_bound"] = {"c1": c1, "window": [0.0, 200.0]}

    sigma = tuple(section.get("sigma", (1, 1, -1, -1)))
    boxes = tuple(float(S) for S in section.get("s_boxes", (2.0, 4.0, 8.0)))
    rep = dv.g_integrability_estimate(
        sigma, cfg.d, s_boxes=boxes,
        resolution=int(section.get("resolution", 16)),
        points_per_shell=int(section.get("points_per_shell", 1024)),
    )
    payload["integrability"] = rep.to_dict()

    write_report_json(os.path.join(outdir, "validate.json"), payload)
    if cfg.plots:
        figures.save_decay_figure(fit, bound, os.path.join(outdir, "propagator_decay.png"))
        figures.save_integrability_figure(rep, os.path.join(outdir, "integrability.png"))
    print(f"validate-dispersion: decay exponent {fit.fitted_exponent:.4f} "
          f"(reference {bound:.4f}), integrability {rep.verdict} -> {outdir}")
    return 0


def cmd_selftest(cfg, outdir):
    from .selftest import run_selftest

    checks = run_selftest(epsilon=cfg.epsilon, backend=cfg.backend, rng_seed=cfg.seed or 20240)
    failures = [c for c in checks if not c.ok]
    for c in checks:
        print(c.line())
    write_report_json(os.path.join(outdir, "selftest.json"), {
        "config": cfg.to_dict(),
        "checks": [
            {"name": c.name, "ok": c.ok, "worst": c.worst, "threshold": c.threshold,
             "detail": c.detail}
            for c in checks
        ],
        "failures": len(failures),
    })
    print(f"selftest: {len(checks) - len(failures)}/{len(checks)} suites pass -> {outdir}")
    return 1 if failures else 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "epsilon-study": cmd_epsilon_study,
    "sigma-coll": cmd_sigma_coll,
    "validate-dispersion": cmd_validate_dispersion,
    "selftest": cmd_selftest,
}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    overrides = {}
    if args.output is not None:
        overrides["output"] = args.output
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = load_config(args.config, overrides)
    except KineticsError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    try:
        return _COMMANDS[args.command](cfg, outdir)
    except KineticsError as err:
        if err.code == "config-error":
            print(f"configuration error: {err}", file=sys.stderr)
            return 2
        if err.code in ("dt-too-large",):
            print(f"constraint violation: {err}", file=sys.stderr)
            return 3
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
