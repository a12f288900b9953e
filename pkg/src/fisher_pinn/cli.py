"""Command-line entry point: train runs, evaluate checkpoints, verify
gradients, and regenerate the paper-style tables and figures.

Exit codes: 0 success (including recorded divergence), 1 check failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evaluation, gradcheck, presets
from .config import ExperimentConfig
from .errors import ConfigurationError, UsageError
from .evaluation import aggregate, write_csv
from .model import Network, load_checkpoint
from .physics import FisherProblem
from .sampling import Domain

OUT_ENV = "FISHER_PINN_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisher-pinn",
        description="Train and evaluate neural solvers for Fisher's equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one configuration across seeds")
    p_train.add_argument("--config", required=True, help="JSON experiment config")
    _common_run_flags(p_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a checkpoint against the oracle")
    p_eval.add_argument("--checkpoint", required=True, help="checkpoint file")
    p_eval.add_argument("--rho", type=float, action="append", default=None,
                        help="rho value(s) to evaluate (generalizing checkpoints)")
    p_eval.add_argument("--sweep", action="store_true",
                        help="log-spaced rho sweep 1e2..1e5 (generalizing checkpoints)")
    p_eval.add_argument("--nx", type=int, default=100)
    p_eval.add_argument("--nt", type=int, default=100)
    p_eval.add_argument("--out", default=None, help="write sweep CSV here")

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p_grad.add_argument("--config", default=None,
                        help="optional config supplying rho and lambda")
    p_grad.add_argument("--draws", type=int, default=5)
    p_grad.add_argument("--tolerance", type=float, default=1e-5)
    p_grad.add_argument("--corrupt", action="store_true",
                        help="negative control: corrupt one gradient component")

    p_preset = sub.add_parser("preset", help="run a reproduction preset")
    p_preset.add_argument("name", help=f"one of {', '.join(presets.PRESET_NAMES)}")
    p_preset.add_argument("--config", default=None, help="base config overriding defaults")
    p_preset.add_argument("--dry-run", action="store_true",
                          help="list the run matrix without training or writing")
    _common_run_flags(p_preset)
    return parser


def _common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seeds", default=None,
                   help="seed list: '0-9', '0,3,7' or a single integer")
    p.add_argument("--epochs", type=int, default=None, help="override epoch count")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel runs")


def parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def resolve_out(cli_out, config_out) -> Path:
    for candidate in (cli_out, config_out, os.environ.get(OUT_ENV)):
        if candidate:
            return Path(candidate)
    return Path("runs")


def cmd_train(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    seeds = parse_seeds(args.seeds) if args.seeds else list(config.seeds)
    out_dir = resolve_out(args.out, config.out_dir)
    runs = [presets.PlannedRun("train", config, s) for s in seeds]
    results = presets.execute_all(runs, out_dir, workers=args.workers)
    l2s, diverged = [], 0
    for (_, seed), record in sorted(results.items()):
        l2s.append(record.final_l2)
        diverged += int(record.diverged)
        print(f"seed {seed}: final_l2={record.final_l2:.6e}"
              + (" [diverged]" if record.diverged else ""))
    stats = aggregate(l2s)
    summary = {
        "config": config.echo(),
        "seeds": seeds,
        "diverged_runs": diverged,
        "final_l2": {"mean": stats.mean, "std": stats.std, "median": stats.median,
                     "q25": stats.q25, "q75": stats.q75},
    }
    base = presets.run_stem(config, seeds[0]).rsplit("_seed", 1)[0]
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{base}_aggregate.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"mean final_l2 over {len(seeds)} seeds: {stats.mean:.6e}")
    return 0


def cmd_evaluate(args) -> int:
    header, params = load_checkpoint(args.checkpoint)
    config = ExperimentConfig.from_dict(header["config"])
    problem = config.problem()
    network = Network.for_problem(config.network_config(header.get("seed", 0)), problem)
    report: dict = {"checkpoint": str(args.checkpoint), "config_hash": header.get("config_hash")}
    if problem.generalizing:
        if args.sweep:
            sweep = evaluation.rho_sweep(network, params, problem,
                                         nx=args.nx, nt=args.nt)
            report["sweep"] = [{"rho": r, "l2": l2} for r, l2 in sweep]
            if args.out:
                write_csv(Path(args.out), ["rho", "l2"], sweep)
        rhos = args.rho or list(evaluation.interior_rho_values(problem.rho_range))
        per_rho = {f"{r:g}": evaluation.l2_error(network, params, problem, rho=r,
                                                 nx=args.nx, nt=args.nt)
                   for r in rhos}
        report["l2_per_rho"] = per_rho
        report["l2_interior_mean"] = float(np.mean(list(per_rho.values())))
    else:
        if args.rho or args.sweep:
            raise UsageError("rho options apply only to generalizing checkpoints")
        report["l2"] = evaluation.l2_error(network, params, problem,
                                           nx=args.nx, nt=args.nt)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_gradcheck(args) -> int:
    kwargs: dict = {"draws": args.draws, "corrupt": args.corrupt}
    if args.config:
        config = ExperimentConfig.from_file(args.config)
        kwargs["lambdas"] = tuple(sorted({0.0, float(config.lam)}))
        if config.generalizing:
            kwargs["rho_range"] = tuple(config.rho)
        else:
            kwargs["rho"] = float(config.rho)
    report = gradcheck.run_gradcheck(**kwargs)
    by_case: dict[str, float] = {}
    for case, _, err, _ in report.rows:
        by_case[case] = max(by_case.get(case, 0.0), err)
    for case, err in sorted(by_case.items()):
        print(f"{case:45s} max_rel_err={err:.3e}")
    print(f"overall max relative error: {report.max_error:.3e} "
          f"(tolerance {args.tolerance:g})")
    if report.max_error > args.tolerance:
        print("gradcheck FAILED", file=sys.stderr)
        return 1
    print("gradcheck passed")
    return 0


def cmd_preset(args) -> int:
    if args.name not in presets.PRESET_NAMES:
        raise UsageError(
            f"unknown preset {args.name!r}; expected one of {', '.join(presets.PRESET_NAMES)}")
    base = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.epochs is not None:
        base = replace(base, epochs=args.epochs)
    seeds = parse_seeds(args.seeds) if args.seeds else list(range(10))
    out_dir = resolve_out(args.out, base.out_dir)
    runs, path = presets.run_preset(args.name, base, seeds, out_dir,
                                    workers=args.workers, dry_run=args.dry_run)
    if args.dry_run:
        for r in runs:
            print(r.describe())
        print(f"{len(runs)} runs planned (dry run, nothing written)")
        return 0
    print(f"wrote {path} from {len(runs)} runs")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "gradcheck": cmd_gradcheck,
        "preset": cmd_preset,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
