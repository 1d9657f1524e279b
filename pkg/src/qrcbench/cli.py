"""Command-line interface: ``qrcbench {run,sweep,compare-feedback,check}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .benchmark import evaluate
from .protocols import FeedbackSpec, run_feedback
from .resources import INFINITE, apply_shot_noise
from .sweep import (
    DESK_CONFIG,
    SweepConfig,
    compare_feedback,
    emit_results,
    load_config,
    noise_seed,
    per_direction_optimize,
    realization_spec,
    run_sweep,
    simulate,
    task_series,
)

EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_FILE = 4


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2))


def cmd_run(args) -> int:
    config = SweepConfig(
        task=args.task,
        g_grid=(args.g,) if args.protocol == "olp" else (0.0,),
        h_grid=(args.h,),
        realizations=1,
        K=args.K,
        eta_max=args.eta_max,
        shot_mode="infinite" if args.shots is None else "finite",
        n_shots_olp=args.shots or 1.0,
        master_seed=args.seed,
        n_spins=args.n_spins,
        santafe_file=args.santafe_file,
    )
    if args.protocol == "feedback":
        series = task_series(config, 0)
        table = run_feedback(series, realization_spec(config, 0, args.h), FeedbackSpec(args.a_fb))
        if args.shots is not None:
            table = apply_shot_noise(table, INFINITE, args.shots, noise_seed(config, "feedback", 0, 0, 0))
    else:
        if args.protocol == "rsp" and args.shots is not None:
            # the given shot count applies to the restarting protocol directly
            series, table = simulate(replace(config, shot_mode="infinite"), "rsp", math.nan, args.h, 0)
            table = apply_shot_noise(table, INFINITE, args.shots, noise_seed(config, "rsp", 0, 0, 0))
        else:
            series, table = simulate(config, args.protocol, args.g, args.h, 0)
    report = evaluate(table, series, args.task, args.eta_max)
    payload = {
        "task": args.task,
        "protocol": args.protocol,
        "g": args.g if args.protocol == "olp" else None,
        "h": args.h,
        "a_fb": args.a_fb if args.protocol == "feedback" else None,
        "shots": args.shots,
        "seed": args.seed,
        "K": config.length,
        "n_features": table.shape[1],
        **report.as_dict(),
    }
    if args.out:
        _write_json(args.out, payload)
    print(f"sum capacity {report.sum_capacity:.6f} over eta = 1..{len(report.capacities)}")
    return 0


def _resolve_config(args) -> SweepConfig:
    config = DESK_CONFIG if args.config == "desk" else load_config(args.config)
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.santafe_file is not None:
        overrides["santafe_file"] = args.santafe_file
    return replace(config, **overrides)


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out_dir)
    if args.per_direction:
        study = per_direction_optimize(config)
        for d, res in study.per_direction.items():
            emit_results(res, out / f"direction_{d}")
        summary = {
            "directions": {
                d: {"rsp_best_h": res.rsp.best_h, **res.best} for d, res in study.per_direction.items()
            },
            "joint_rsp_best": {"h": study.joint_rsp.best_h, "sum_capacity": study.joint_rsp.best_sum},
            "combined_P_R": study.combined_pr,
            "combined_sum_capacity": study.combined_sums.tolist(),
        }
        _write_json(out / "per_direction.json", summary)
        with (out / "capacities_combined.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eta", "capacity"])
            for eta, c in enumerate(study.combined_capacities, start=1):
                w.writerow([eta, repr(float(c))])
        print(f"combined P_R = {study.combined_pr:.4f}")
        return 0
    result = run_sweep(config)
    emit_results(result, out)
    b = result.best
    print(f"RSP best h' = {result.rsp.best_h:g}; OLP best g = {b['g']:g}, h = {b['h']:g}, P_R = {b['P_R']:.4f}")
    return 0


def cmd_compare_feedback(args) -> int:
    config = _resolve_config(args)
    if args.realizations is not None:
        config = replace(config, realizations=args.realizations)
    if args.K is not None:
        config = replace(config, K=args.K)
    cmp = compare_feedback(config, args.a_fb_grid, args.h_fb, (args.g, args.h))
    hi, ai = cmp.best_feedback
    fb = cmp.best_feedback_capacities()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "feedback_vs_olp.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eta", "olp_mean", "olp_std", "feedback_mean", "feedback_std"])
        for e in range(fb.shape[1]):
            w.writerow(
                [e + 1, *(repr(float(v)) for v in (
                    cmp.olp_capacities[:, e].mean(), cmp.olp_capacities[:, e].std(), fb[:, e].mean(), fb[:, e].std()
                ))]
            )
    with (out / "feedback_sum_capacity.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "a_fb", "mean_sum_capacity"])
        for i, h in enumerate(cmp.h_fb_grid):
            for j, a in enumerate(cmp.a_fb_grid):
                w.writerow([repr(h), repr(a), repr(float(cmp.fb_sum_mean[i, j]))])
    _write_json(
        out / "feedback_summary.json",
        {
            "best_feedback": {"h": cmp.h_fb_grid[hi], "a_fb": cmp.a_fb_grid[ai]},
            "olp_point": {"g": cmp.olp_point[0], "h": cmp.olp_point[1]},
            "olp_sum_capacity_mean": float(cmp.olp_capacities.sum(axis=1).mean()),
            "feedback_sum_capacity_mean": float(fb.sum(axis=1).mean()),
            "master_seed": config.master_seed,
        },
    )
    print(f"best feedback h = {cmp.h_fb_grid[hi]:g}, a_fb = {cmp.a_fb_grid[ai]:g}")
    return 0


def cmd_check(args) -> int:
    from .checks import run_checks

    return 0 if run_checks() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrcbench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single trajectory and its capacities")
    run.add_argument("--task", choices=("forward", "memory"), default="memory")
    run.add_argument("--protocol", choices=("rsp", "olp", "feedback"), default="olp")
    run.add_argument("--g", type=float, default=0.355)
    run.add_argument("--h", type=float, default=0.066)
    run.add_argument("--a-fb", type=float, default=0.63)
    run.add_argument("--shots", type=float, default=None, help="finite shot count (default: infinite)")
    run.add_argument("--eta-max", type=int, default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--K", type=int, default=None, help="series length")
    run.add_argument("--n-spins", type=int, default=6)
    run.add_argument("--santafe-file", default=None)
    run.add_argument("--out", default=None, help="JSON output path")
    run.set_defaults(func=cmd_run)

    def sweep_common(p):
        p.add_argument("--config", default="desk", help="config file, or 'desk' for the built-in desk preset")
        p.add_argument("--out-dir", default="results")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--santafe-file", default=None)

    sweep = sub.add_parser("sweep", help="(g, h) grid sweep")
    sweep_common(sweep)
    sweep.add_argument("--per-direction", action="store_true", help="optimise each direction separately, then combine")
    sweep.set_defaults(func=cmd_sweep)

    fbc = sub.add_parser("compare-feedback", help="feedback-driven protocol versus the online protocol")
    sweep_common(fbc)
    fbc.add_argument("--a-fb-grid", type=_float_list, default=(0.0, 0.2, 0.4, 0.63, 0.8, 1.0, 1.5, 2.0))
    fbc.add_argument("--h-fb", type=_float_list, default=(10.0,))
    fbc.add_argument("--g", type=float, default=0.355)
    fbc.add_argument("--h", type=float, default=0.066)
    fbc.add_argument("--realizations", type=int, default=None)
    fbc.add_argument("--K", type=int, default=None)
    fbc.set_defaults(func=cmd_compare_feedback)

    chk = sub.add_parser("check", help="run the built-in invariant checks")
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"qrcbench: file error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except OSError as exc:
        print(f"qrcbench: I/O error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except ValueError as exc:
        print(f"qrcbench: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
