"""Command-line surface: solve, verify, simulate, sweep.

Exit codes: 0 ok, 1 validation error, 2 nonconvergence, 3 analytic
hypothesis violated (gamma <= 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .assembly import export_table, residual_probes
from .config import apply_overrides, load_config
from .mc import MCConfig, estimate_ruin
from .model import derive_constants
from .pipeline import HypothesisError, pick_barrier, run_pipeline, verification_checks
from .quadrature import QuadratureError
from .tail_solver import ContractionError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGENCE = 2
EXIT_HYPOTHESIS = 3


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n")


def cmd_solve(cfg, out: Path) -> int:
    result = run_pipeline(cfg)
    out.mkdir(parents=True, exist_ok=True)
    summary = result.summary()
    export_table(result.glued, residual_probes(result.glued), out / "solution.csv",
                 cfg.params, cfg.dist)
    _write_json(out / "summary.json", summary)
    lines = [
        "annuity-model ruin solver",
        f"  gamma = {summary['gamma']:.6g}, alpha = {summary['alpha']:.6g}, "
        f"mu = {summary['mu']:.6g}",
        f"  gluing point u0 = {summary['u0']:.6g} (theta = {summary['theta']:.4f}, "
        f"{result.tail.iterations} fixed-point iterations)",
        f"  normalization C = {summary['C']:.12g}",
        f"  ruin decay: Psi(u) ~ C_asym * u^-{summary['gamma'] - 1:g}, "
        f"C_asym = {summary['C_asym']:.12g}",
        f"  max equation residual over probes: {summary['residual_max']:.3e}",
        "  ruin probability at probes:",
    ]
    lines += [f"    Psi({u}) = {p:.10g}" for u, p in summary["psi"].items()]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_verify(cfg, out: Path) -> int:
    result = run_pipeline(cfg)
    checks = verification_checks(result)
    width = max(len(name) for name, _, _ in checks)
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        failed += not ok
        print(f"  {name:<{width}}  {status}  {detail}")
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NONCONVERGENCE


def cmd_simulate(cfg, out: Path, per_path: bool) -> int:
    barrier = cfg.mc.barrier
    psi_b = 0.0
    solution = None
    consts = derive_constants(cfg.params)
    if consts.gamma > 1:
        solution = run_pipeline(cfg)
        if barrier is None:
            # the barrier must dominate every probed starting capital
            barrier = max(pick_barrier(solution), 2.0 * max(cfg.probes))
        psi_b = float(solution.glued.psi(barrier))
    elif barrier is None:
        barrier = max(1e9, 2.0 * max(cfg.probes))
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for u in cfg.probes:
        mc_cfg = MCConfig(horizon=cfg.mc.horizon, dt=cfg.mc.dt,
                          n_paths=cfg.mc.paths, barrier=barrier,
                          seed=cfg.mc.seed)
        est = estimate_ruin(cfg.params, cfg.dist, u, mc_cfg,
                            psi_at_barrier=psi_b)
        results.append(json.loads(est.to_json()))
        line = (f"  u = {u:g}: p_hat = {est.p_hat:.5f} +/- {est.ci_halfwidth:.5f}"
                f" (censored {est.n_censored}, bias note {est.bias_note:.2e})")
        if solution is not None:
            line += f"  [solver Psi = {solution.glued.psi(u):.5f}]"
        print(line)
        if per_path:
            from .mc import path_rng, simulate_path
            with open(out / f"paths_u{u:g}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["path", "outcome", "time"])
                for i in range(mc_cfg.n_paths):
                    o = simulate_path(cfg.params, cfg.dist, u, mc_cfg,
                                      path_rng(mc_cfg.seed, i))
                    writer.writerow([i, o.kind, f"{o.time:.17g}"])
    _write_json(out / "simulate.json", results)
    return EXIT_OK


def cmd_sweep(cfg, out: Path, param: str, start: float, stop: float, num: int) -> int:
    if param not in ("a", "r", "sigma", "kappa", "c", "lambda"):
        raise ValueError(f"cannot sweep over {param!r}")
    field = "lam" if param == "lambda" else param
    out.mkdir(parents=True, exist_ok=True)
    values = np.linspace(start, stop, num)
    rows = []
    gammas = []
    for val in values:
        params = replace(cfg.params, **{field: float(val)})
        consts = derive_constants(params)
        gammas.append(consts.gamma)
        row = {"param": param, "value": float(val), "gamma": consts.gamma,
               "feasible": consts.gamma > 1}
        filled = False
        if consts.gamma > 1:
            try:
                result = run_pipeline(replace(cfg, params=params))
            except (ContractionError, QuadratureError, RuntimeError,
                    ValueError, OverflowError, FloatingPointError) as exc:
                print(f"  {param} = {val:g}: solve failed ({exc})",
                      file=sys.stderr)
            else:
                for u in cfg.probes:
                    row[f"psi_{u:g}"] = float(result.glued.psi(u))
                row["c_asym"] = result.summary()["C_asym"]
                filled = True
        if not filled:
            for u in cfg.probes:
                row[f"psi_{u:g}"] = float("nan")
            row["c_asym"] = float("nan")
        rows.append(row)
    fieldnames = list(rows[0].keys())
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v)
                             for k, v in row.items()})
    # bracket the gamma = 1 threshold between consecutive sweep points
    brackets = []
    for i in range(len(values) - 1):
        if (gammas[i] - 1.0) * (gammas[i + 1] - 1.0) < 0:
            brackets.append([float(values[i]), float(values[i + 1])])
    _write_json(out / "sweep_summary.json",
                {"param": param, "values": [float(v) for v in values],
                 "gamma": gammas, "threshold_brackets": brackets})
    for lo, hi in brackets:
        print(f"  gamma = 1 threshold bracketed in {param} in [{lo:g}, {hi:g}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruinsolve",
        description="Survival/ruin probabilities for the annuity model with "
                    "risky investment",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "simulate", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int)
        p.add_argument("--u0-safety", type=float, dest="safety")
        p.add_argument("--tol", type=float)
        p.add_argument("--paths", type=int)
        p.add_argument("--horizon", type=float)
        if name == "simulate":
            p.add_argument("--per-path", action="store_true")
        if name == "sweep":
            p.add_argument("--param", required=True)
            p.add_argument("--start", type=float, required=True)
            p.add_argument("--stop", type=float, required=True)
            p.add_argument("--num", type=int, default=10)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, seed=args.seed, safety=args.safety,
                              tol=args.tol, paths=args.paths,
                              horizon=args.horizon)
        out = Path(args.out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.per_path)
        return cmd_sweep(cfg, out, args.param, args.start, args.stop, args.num)
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ContractionError, QuadratureError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
