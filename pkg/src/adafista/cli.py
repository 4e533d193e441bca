"""Batch command line: run, compare, rates, certify, report.

Config is one JSON document:

    {
      "problem": "gaussian_1d" | {"preset": ..., <overrides>},
      "solver": {"schedule": {"kind": "chambolle-dossal", "a": 20}, "iters": 1000},
      "policy": {"mode": "disc_gap", "gap_factor": 2.0, ...},
      "output": {"check_every": 10, "dir": "out"}
    }

run/compare emit data files only (trace.csv, recon.json, meta.json,
slopes.json); report additionally renders matplotlib figures next to them.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .certify import certify as make_certificate
from . import problems, refine
from .driver import TRACE_COLUMNS, RunResult, solve
from .fista import ChambolleDossal, Greedy, energy_value
from .mesh import PiecewiseConstant
from .refine import RateParams, RefinePolicy


def load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if "problem" not in cfg:
        raise ValueError("config error at 'problem': key missing")
    return cfg


def build_problem(cfg: dict, seed=None):
    pcfg = cfg["problem"]
    if isinstance(pcfg, str):
        pcfg = {"preset": pcfg}
    preset = pcfg.get("preset")
    if preset not in problems.PRESETS:
        raise ValueError(f"config error at 'problem.preset': unknown {preset!r}")
    kwargs = {k: v for k, v in pcfg.items() if k != "preset"}
    if seed is not None:
        kwargs["seed"] = seed
    spec = problems.PRESETS[preset](**kwargs)
    return spec


def build_schedule(scfg: dict):
    kind = scfg.get("kind", "chambolle-dossal")
    if kind == "greedy":
        return Greedy()
    if kind == "chambolle-dossal":
        return ChambolleDossal(a=scfg.get("a", 2.0))
    raise ValueError(f"config error at 'solver.schedule.kind': unknown {kind!r}")


def build_policy(cfg: dict) -> RefinePolicy:
    pol = dict(cfg.get("policy", {}))
    pol.setdefault("check_every", cfg.get("output", {}).get("check_every", 10))
    return RefinePolicy(**pol)


def run_one(cfg: dict, seed=None, iters=None, fixed=False, uniform_depth=0):
    spec = build_problem(cfg, seed=seed)
    op, energy, raw_bound = problems.build(spec)
    scfg = cfg.get("solver", {})
    schedule = build_schedule(scfg.get("schedule", {}))
    policy = build_policy(cfg)
    n_iters = iters if iters is not None else scfg.get("iters", 1000)
    result = solve(
        op,
        energy,
        schedule,
        n_iters,
        policy=policy,
        mode=spec.mode,
        fixed=fixed,
        uniform_depth=uniform_depth,
    )
    rate = RateParams.lasso(op.dim)
    result.meta = {
        "problem": spec.name,
        "seed": spec.seed,
        "mu": spec.mu,
        "iters": n_iters,
        "fixed": fixed,
        "operator_norm_raw": raw_bound,
        "operator_scale": op.scale,
        "kappa": rate.kappa,
        "predicted_energy_exponent": rate.energy_exponent,
        "predicted_resolution_exponent": 2.0 / (1.0 + op.dim),
        "config": cfg,
    }
    return result


def write_trace(path: str, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in rows:
            w.writerow([row[c] for c in TRACE_COLUMNS])


def write_outputs(out_dir: str, result: RunResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_trace(os.path.join(out_dir, "trace.csv"), result.rows)
    recon = result.disc.as_function(result.state.x)
    doc = json.loads(recon.to_json())
    if result.disc.mode == "wavelet":
        doc["wavelet_coeffs"] = list(result.state.x)
    with open(os.path.join(out_dir, "recon.json"), "w") as fh:
        json.dump(doc, fh)
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump(result.meta, fh, indent=2)


def fit_slope(n: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    """Least-squares slope of log10 y against log10 n on n in [lo, hi]."""
    mask = (n >= lo) & (n <= hi) & (y > 0) & (n > 0)
    if mask.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log10(n[mask]), np.log10(y[mask]), 1)[0])


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.get("output", {}).get("dir", "out")
    result = run_one(cfg, seed=args.seed, iters=args.iters)
    write_outputs(out, result)
    print(f"wrote {out}/trace.csv ({len(result.rows)} rows)")
    return 0


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.get("output", {}).get("dir", "out")
    result = run_one(cfg, seed=args.seed, iters=args.iters)
    write_outputs(out, result)
    from .plots import render_figures

    files = render_figures(out, result.rows, result.disc.as_function(result.state.x))
    print(f"wrote {out}/trace.csv and {len(files)} figures")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.get("output", {}).get("dir", "out")
    os.makedirs(out, exist_ok=True)
    window = cfg.get("output", {}).get("slope_window", [100, 10000])
    fixed_sizes = cfg.get("compare", {}).get("fixed", [512])
    arms = {"adaptive": run_one(cfg, seed=args.seed, iters=args.iters)}
    for size in fixed_sizes:
        depth_per_axis = int(np.round(np.log2(size) / _dim_of(cfg)))
        arms[f"fixed_{size}"] = run_one(
            cfg, seed=args.seed, iters=args.iters, fixed=True,
            uniform_depth=depth_per_axis,
        )
    slopes = {}
    for name, result in arms.items():
        arm_dir = os.path.join(out, name)
        os.makedirs(arm_dir, exist_ok=True)
        write_outputs(arm_dir, result)
        slopes[name] = fit_slope(
            result.column("n"), result.column("min_so_far_cont_gap"),
            window[0], window[1],
        )
    with open(os.path.join(out, "slopes.json"), "w") as fh:
        json.dump({"window": window, "slopes": slopes}, fh, indent=2)
    print(json.dumps(slopes, indent=2))
    return 0


def _dim_of(cfg: dict) -> int:
    spec = build_problem(cfg)
    return spec.op_raw.dim


def cmd_rates(args) -> int:
    k = refine.kappa(args.a_U, args.a_E)
    print(f"kappa = {k:.6f}")
    print(f"energy exponent = {2 * (1 - k):.6f}")
    for d in (1, 2):
        print(f"LASSO d={d}: resolution exponent = {2.0 / (1 + d):.6f}")
    return 0


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    spec = build_problem(cfg, seed=args.seed)
    op, energy, _ = problems.build(spec)
    with open(args.recon) as fh:
        doc = json.load(fh)
    u = PiecewiseConstant.from_json(json.dumps(doc))
    from .discretize import MeshDiscretization

    disc = MeshDiscretization(op)
    # rebuild the stored mesh by replaying refinements of the serialized leaves
    target = {(r["level"], tuple(r["index"])) for r in doc["leaves"]}
    while True:
        pos = [
            i
            for i in range(disc.mesh.leaf_count())
            if (int(disc.mesh.levels[i]), tuple(int(c) for c in disc.mesh.indices[i]))
            not in target
        ]
        if not pos:
            break
        disc.refine(pos, [])
    x = np.array(
        [
            u.coeffs[u.mesh.position(u.mesh.locate(mid))]
            for mid in disc.mesh.leaf_midpoints()
        ]
    )
    report = make_certificate(energy, disc, x)
    print(
        json.dumps(
            {
                "energy": report.energy,
                "disc_gap": report.disc_gap,
                "cont_gap": report.cont_gap,
                "disc_grad": report.disc_grad,
                "cont_grad": report.cont_grad,
                "screen_ratio": report.screen_ratio,
                "screened_cells": int(len(report.screened)),
            },
            indent=2,
        )
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="adafista",
        description="adaptive-mesh FISTA with a-posteriori certificates",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, fn in (
        ("run", cmd_run),
        ("report", cmd_report),
        ("compare", cmd_compare),
        ("certify", cmd_certify),
    ):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--iters", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        if verb == "certify":
            p.add_argument("--recon", required=True)
        p.set_defaults(fn=fn)
    p = sub.add_parser("rates")
    p.add_argument("a_U", type=float)
    p.add_argument("a_E", type=float)
    p.set_defaults(fn=cmd_rates)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
