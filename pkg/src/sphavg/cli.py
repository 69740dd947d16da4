"""Command-line entry points: run, sweep, oracle."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import estimators, oracles, runner


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sphavg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    _common_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run the config across parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, help="numeric config field to vary")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    _common_flags(p_sweep)

    p_oracle = sub.add_parser("oracle", help="Monte-Carlo stationary averages for the config's instance")
    p_oracle.add_argument("config")
    p_oracle.add_argument("--samples", type=int, default=100_000)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--large", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = runner.ExperimentConfig.from_json(args.config)
            manifest = runner.run(cfg, seed_offset=args.seed_offset, large=args.large, workers=args.workers)
            print(f"wrote {len(manifest['csv_files'])} CSVs and manifest.json to {manifest['resolved']['output_dir']}")
        elif args.command == "sweep":
            cfg = runner.ExperimentConfig.from_json(args.config)
            values = [float(v) for v in args.values.split(",") if v != ""]
            rows = runner.sweep(cfg, args.param, values, seed_offset=args.seed_offset,
                                large=args.large, workers=args.workers)
            print(f"wrote sweep.csv with {len(rows)} rows under {cfg.output_dir}")
        else:
            _oracle_command(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed-offset", dest="seed_offset", type=int, default=0,
                   help="shift every trajectory seed by this amount")
    p.add_argument("--workers", type=int, default=1,
                   help="worker pool size for sweep points (run is always one batch)")
    p.add_argument("--large", action="store_true",
                   help="allow paper-scale working sets (a memory estimate is printed first)")


def _oracle_command(args) -> None:
    cfg = runner.ExperimentConfig.from_json(args.config)
    resolved = runner._resolve(cfg)
    est = runner._memory_estimate_bytes(resolved)
    if est > runner.LARGE_BYTES and not args.large:
        raise ValueError(f"estimated working set {est / 1e9:.2f} GB; pass --large to proceed")
    instance = runner._build_instance(resolved)
    stats = oracles.mc_stationary(instance, args.samples, seed=args.seed)
    theta_star = instance.theta_star
    b_dot = float(stats.b_bar @ theta_star)
    b_norm = float(np.linalg.norm(stats.b_bar))
    report = {
        "samples": stats.mc_samples,
        "b_bar_dot_theta_star": b_dot,
        "b_bar_norm": b_norm,
        "b_bar_direction_corr": b_dot / b_norm if b_norm > 0 else None,
        "se_b_max": float(stats.se_b.max()),
        "se_g_max": float(stats.se_g.max()),
    }
    if resolved["problem"] == "tensor_pca" and resolved["k_star"] % 2 == 1:
        report["closed_form_scale"] = oracles.closed_form_tpca_scale(resolved["k_star"], resolved["d"])
    try:
        v, lam, gap = estimators.top_eigenvector(stats.g_bar, tol=1e-8, seed=args.seed)
        report["g_bar_top_eig_corr"] = abs(float(v @ theta_star))
        report["g_bar_top_eigenvalue"] = lam
        report["g_bar_eigengap"] = gap
    except estimators.PowerIterationError as err:
        report["g_bar_top_eig_corr"] = None
        report["g_bar_top_eigenvalue"] = err.rayleigh
    out_dir = Path(resolved["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "oracle.json").write_text(json.dumps(report, indent=2))
    for key, val in report.items():
        print(f"{key}: {val}")


if __name__ == "__main__":
    raise SystemExit(main())
