"""Command-line interface.

Subcommands:
  run      simulate a scenario (preset name or TOML config) and emit files
  bench    per-iteration step-cost benchmark
  analyze  tracking-condition report plus estimation-error regression
  lemmas   property suites for the closed-form eigenvalue / unit-vector facts
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import (
    ConvexityConfig,
    check_tracking_conditions,
    estimation_error_scaling,
    rank_one_diff_min_eig,
    unit_diff_bound_holds,
)
from .estimators import OracleConfig, ols_initialize
from .geometry import measure
from .harness import (
    PRESET_NAMES,
    benchmark_per_iteration,
    emit,
    load_config,
    preset,
    run_monte_carlo,
)
from .streams import STREAM_FRAME, STREAM_TRAJECTORY, substream

DEFAULT_SIGMA_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)


def _load_scenario(spec: str):
    if spec in PRESET_NAMES:
        return preset(spec)
    path = Path(spec)
    if path.exists():
        return load_config(path)
    raise SystemExit(f"'{spec}' is neither a preset ({', '.join(PRESET_NAMES)}) nor a config file")


def _apply_overrides(config, args):
    if getattr(args, "mc_runs", None) is not None:
        config = replace(config, mc_runs=args.mc_runs)
    if getattr(args, "seed", None) is not None:
        config = replace(config, root_seed=args.seed)
    if getattr(args, "init", None) is not None:
        config = replace(config, init=args.init)
    if getattr(args, "oracle", False) and config.oracle is None:
        config = replace(config, oracle=OracleConfig())
    return config


def cmd_run(args) -> int:
    config = _apply_overrides(_load_scenario(args.scenario), args)
    result = run_monte_carlo(config, threads=args.threads)
    for method in config.methods:
        m = result.mean_metrics[method]
        print(
            f"{config.name} {method.upper():>3}: CTTE={m.ctte:.6g}  "
            f"final err={m.per_step_error[-1]:.3g}  V={m.path_length_V:.4g}  "
            f"N1={m.N1:.4g}  N2={m.N2:.4g}  failures={result.failures[method]}"
        )
    if args.out:
        manifest = emit(result, args.out)
        print(f"wrote {len(manifest) + 1} files to {args.out}")
    return 0


def cmd_bench(args) -> int:
    config = _apply_overrides(_load_scenario(args.scenario), args)
    table = benchmark_per_iteration(config, iterations=args.iterations)
    for method, seconds in table["methods"].items():
        print(f"{config.name} {method.upper():>3}: median {seconds * 1e6:.2f} us/step")
    if "onm_over_ogd" in table:
        print(f"ONM/OGD ratio: {table['onm_over_ogd']:.2f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{config.name}_bench.json").write_text(json.dumps(table, indent=2) + "\n")
    return 0


def cmd_analyze(args) -> int:
    config = _apply_overrides(_load_scenario(args.scenario), args)
    sensors = config.sensor_array()

    scaling = None
    if args.idealized:
        k1 = k2 = 0.0
    else:
        scaling = estimation_error_scaling(
            sensors,
            config.x1_true,
            DEFAULT_SIGMA_GRID,
            runs_per_sigma=args.runs_per_sigma,
            oracle_cfg=config.oracle or OracleConfig(),
            rng=substream(config.root_seed, 0xE5714),
        )
        k1, k2 = max(scaling.K1_hat, 0.0), max(scaling.K2_hat, 0.0)
        print(
            f"estimation-error fit: K1={scaling.K1_hat:.4g}  K2={scaling.K2_hat:.4g}  "
            f"R^2={scaling.r_squared:.5f}"
        )

    base = config.analysis or ConvexityConfig(c0=config.noise.c0)
    cfg = replace(base, K1=k1, K2=k2)
    trajectory = config.trajectory.realize(
        config.x1_true, config.T, substream(config.root_seed, 0, STREAM_TRAJECTORY)
    )
    if config.init == "exact":
        x0 = np.asarray(config.x1_true, dtype=float)
    else:
        frame = measure(
            sensors,
            trajectory.positions[0],
            config.noise.sigma(1),
            substream(config.root_seed, 0, STREAM_FRAME, 1),
            t=1,
        )
        x0 = ols_initialize(sensors, frame)
    report = check_tracking_conditions(cfg, sensors, trajectory, config.noise, config.eta, x0)

    print(f"mode={report.mode}  Lambda={report.Lambda:.6g}  kappa={report.kappa:.6g}")
    print(
        f"mu_hat={report.mu_hat}  L_hat={report.L_hat}  rho={report.rho}  "
        f"sigma_max={report.sigma_max:.4g}  v_max={report.v_max:.4g}"
    )
    for flag in ("dist_condition_ok", "kappa_positive", "radius_condition_ok", "init_condition_ok"):
        print(f"{flag}: {getattr(report, flag)}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "config": config.to_dict(),
            "convexity": report.to_dict(),
            "estimation_error_scaling": scaling.to_dict() if scaling else None,
        }
        (out / f"{config.name}_analysis.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
        print(f"wrote {out / f'{config.name}_analysis.json'}")
    return 0


def cmd_lemmas(args) -> int:
    rng = np.random.default_rng(args.seed)
    ok = True

    worst = 0.0
    for _ in range(args.pairs):
        n = int(rng.integers(2, 6))
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        closed = rank_one_diff_min_eig(u, v)
        dense = float(np.linalg.eigvalsh(np.outer(u, u) - np.outer(v, v))[0])
        worst = max(worst, abs(closed - dense))
    passed = worst <= 1e-10
    ok &= passed
    print(f"rank-one min-eig formula vs eigensolver ({args.pairs} pairs): "
          f"max |diff| = {worst:.3e}  {'PASS' if passed else 'FAIL'}")

    violations = 0
    eq_worst = 0.0
    for _ in range(args.unit_pairs):
        n = int(rng.integers(2, 6))
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        lhs, rhs, holds = unit_diff_bound_holds(x, y)
        if not holds:
            violations += 1
        y_eq = y * (np.linalg.norm(x) / np.linalg.norm(y))
        lhs, rhs, _ = unit_diff_bound_holds(x, y_eq)
        eq_worst = max(eq_worst, abs(lhs - rhs))
    passed = violations == 0 and eq_worst <= 1e-12
    ok &= passed
    print(f"unit-direction difference bound ({args.unit_pairs} pairs): violations={violations}, "
          f"equal-norm |lhs-rhs| max = {eq_worst:.3e}  {'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toatrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a scenario and emit result files")
    run_p.add_argument("scenario", help="preset name or TOML config path")
    run_p.add_argument("--mc-runs", type=int, dest="mc_runs")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--threads", type=int, default=1)
    run_p.add_argument("--oracle", action="store_true",
                       help="also compute the per-step minimizer series")
    run_p.add_argument("--init", choices=["exact", "ols"])
    run_p.set_defaults(func=cmd_run)

    bench_p = sub.add_parser("bench", help="per-iteration step cost")
    bench_p.add_argument("scenario")
    bench_p.add_argument("--iterations", type=int, default=2000)
    bench_p.add_argument("--seed", type=int)
    bench_p.add_argument("--out")
    bench_p.set_defaults(func=cmd_bench)

    an_p = sub.add_parser("analyze", help="tracking-condition report and error regression")
    an_p.add_argument("scenario")
    an_p.add_argument("--runs-per-sigma", type=int, default=500, dest="runs_per_sigma")
    an_p.add_argument("--idealized", action="store_true",
                      help="use K1=K2=0 instead of the empirical fit")
    an_p.add_argument("--seed", type=int)
    an_p.add_argument("--init", choices=["exact", "ols"])
    an_p.add_argument("--out")
    an_p.set_defaults(func=cmd_analyze)

    lem_p = sub.add_parser("lemmas", help="closed-form eigenvalue/unit-vector property suites")
    lem_p.add_argument("--pairs", type=int, default=1000)
    lem_p.add_argument("--unit-pairs", type=int, default=100_000, dest="unit_pairs")
    lem_p.add_argument("--seed", type=int, default=0)
    lem_p.set_defaults(func=cmd_lemmas)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
