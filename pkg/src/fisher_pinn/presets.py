"""Reproduction presets: the full table/figure matrices, run scheduling
across a worker pool, and the CSV artifacts.

Each preset expands to a list of (config, seed) runs.  Runs are independent;
results are merged and written in a canonical order so output bodies do not
depend on scheduling.  Finished runs are reused when their checkpoint
carries the same config hash.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import evaluation
from .config import ExperimentConfig
from .evaluation import aggregate, default_rho_sweep, wavefront_profile, write_csv
from .model import Network, load_checkpoint, save_checkpoint
from .training import RunRecord, config_hash, train

PRESET_NAMES = ("table2", "table3", "table4", "fig3", "fig4", "fig5", "fig6")

TABLE_RHOS = (1e2, 1e3, 1e4)
PINN_LAMBDAS = (0.0, 0.1, 1.0, 10.0)
MODELS = ("standard-ann", "wave-ann", "standard-pinn", "wave-pinn")
RHO_RANGES = ((1e2, 1e3), (1e3, 1e4), (1e2, 1e4))


@dataclass(frozen=True)
class PlannedRun:
    label: str
    config: ExperimentConfig
    seed: int

    def describe(self) -> str:
        c = self.config
        rho = c.rho if not isinstance(c.rho, (list, tuple)) else f"{c.rho[0]:g}-{c.rho[1]:g}"
        return (f"{self.label}: model={c.model} rho={rho} lambda={c.lam:g} "
                f"epochs={c.resolved_epochs()} seed={self.seed}")


def run_stem(config: ExperimentConfig, seed: int) -> str:
    if config.generalizing:
        rho = f"rho{config.rho[0]:g}-{config.rho[1]:g}"
    else:
        rho = f"rho{config.rho:g}"
    return f"{config.model}_{rho}_lam{config.lam:g}_{config.run_signature()}_seed{seed}"


def execute_run(config: ExperimentConfig, seed: int, out_dir: Path,
                write: bool = True, reuse: bool = True) -> RunRecord:
    """Train one (config, seed) run, or reload it if an identical run exists."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = run_stem(config, seed)
    echo = config.echo()
    ckpt = out_dir / f"{stem}.ckpt"
    if reuse and ckpt.exists():
        record = _reload_run(out_dir, stem, config.run_signature(), echo, seed)
        if record is not None:
            return record
    problem = config.problem()
    record = train(problem, config.network_config(seed), config.train_config(seed),
                   config_echo=echo)
    if write:
        record.write(out_dir, stem)
        save_checkpoint(ckpt, {"config": echo, "config_hash": config_hash(echo),
                               "run_sig": config.run_signature(), "seed": seed,
                               "epoch": config.resolved_epochs()},
                        record.final_params)
    return record


def _reload_run(out_dir: Path, stem: str, run_sig: str, echo: dict,
                seed: int) -> RunRecord | None:
    try:
        header, params = load_checkpoint(out_dir / f"{stem}.ckpt")
        sidecar = json.loads((out_dir / f"{stem}.json").read_text(encoding="utf-8"))
        csv_lines = (out_dir / f"{stem}.csv").read_text(encoding="utf-8").strip().splitlines()
    except (OSError, ValueError):
        return None
    if header.get("run_sig") != run_sig or header.get("seed") != seed:
        return None
    columns = csv_lines[0].split(",")
    rows = []
    for line in csv_lines[1:]:
        cells = line.split(",")
        rows.append(tuple([int(cells[0])] + [float(c) for c in cells[1:]]))
    record = RunRecord(columns=columns, rows=rows, config=echo, seed=seed,
                       final_params=params, final_l2=sidecar["final_l2"],
                       wall_time_s=sidecar["wall_time_s"],
                       diverged=sidecar["diverged"])
    return record


def execute_all(runs, out_dir: Path, workers: int = 1, reuse: bool = True):
    """Run the plan on a thread pool; returns {(label, seed): RunRecord}."""
    results = {}
    if workers <= 1:
        for r in runs:
            results[(r.label, r.seed)] = execute_run(r.config, r.seed, out_dir, reuse=reuse)
        return results
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(execute_run, r.config, r.seed, out_dir, True, reuse): r
            for r in runs
        }
        for fut, r in futures.items():
            results[(r.label, r.seed)] = fut.result()
    return results


# ---------------------------------------------------------------------------
# Preset plans
# ---------------------------------------------------------------------------


def plan(name: str, base: ExperimentConfig, seeds) -> list[PlannedRun]:
    if name == "table2":
        runs = []
        for model in MODELS:
            lambdas = PINN_LAMBDAS if model.endswith("pinn") else (0.0,)
            for lam in lambdas:
                for rho in TABLE_RHOS:
                    cfg = replace(base, model=model, lam=lam, rho=rho)
                    runs.extend(PlannedRun(f"{model}|{lam:g}|{rho:g}", cfg, s) for s in seeds)
        return runs
    if name == "table3":
        settings = [
            ("baseline", {}),
            ("2x10", {"neurons": 10}),
            ("2x30", {"neurons": 30}),
            ("swish", {"activation": "swish"}),
            ("sigmoid", {"activation": "sigmoid"}),
            ("sine", {"activation": "sine"}),
            ("Ncol512", {"n_col": 512}),
            ("Ncol2048", {"n_col": 2048}),
        ]
        runs = []
        for setting, overrides in settings:
            for rho in TABLE_RHOS:
                cfg = replace(base, model="wave-pinn", lam=1.0, rho=rho, **overrides)
                runs.extend(PlannedRun(f"{setting}|{rho:g}", cfg, s) for s in seeds)
        return runs
    if name == "table4":
        runs = []
        for model in MODELS:
            for rng in RHO_RANGES:
                cfg = replace(base, model=model, lam=1.0, rho=list(rng))
                runs.extend(
                    PlannedRun(f"{model}|{rng[0]:g}-{rng[1]:g}", cfg, s) for s in seeds
                )
        return runs
    if name == "fig3":
        cfg = replace(base, model="wave-pinn", lam=1.0, rho=1e4)
        return [PlannedRun("fig3", cfg, seeds[0])]
    if name == "fig4":
        runs = []
        for model in MODELS:
            cfg = replace(base, model=model, lam=1.0, rho=1e3)
            runs.extend(PlannedRun(f"{model}", cfg, s) for s in seeds)
        return runs
    if name in ("fig5", "fig6"):
        models = MODELS if name == "fig5" else ("wave-pinn",)
        runs = []
        for model in models:
            cfg = replace(base, model=model, lam=1.0, rho=[1e2, 1e4])
            use_seeds = seeds if name == "fig5" else seeds[:1]
            runs.extend(PlannedRun(f"{model}", cfg, s) for s in use_seeds)
        return runs
    raise KeyError(name)


def emit(name: str, runs: list[PlannedRun], results, out_dir: Path) -> Path:
    """Write the preset's CSV artifact from finished runs."""
    if name == "table2":
        rows = []
        for model in MODELS:
            lambdas = PINN_LAMBDAS if model.endswith("pinn") else (0.0,)
            for lam in lambdas:
                for rho in TABLE_RHOS:
                    vals = [results[(f"{model}|{lam:g}|{rho:g}", r.seed)].final_l2
                            for r in runs if r.label == f"{model}|{lam:g}|{rho:g}"]
                    st = aggregate(vals)
                    lam_cell = f"{lam:g}" if model.endswith("pinn") else "-"
                    rows.append((model, lam_cell, rho, st.mean, st.std))
        path = out_dir / "table2.csv"
        write_csv(path, ["model", "lambda", "rho", "mean", "std"], rows)
        return path
    if name == "table3":
        labels = []
        for r in runs:
            if r.label not in labels:
                labels.append(r.label)
        rows = []
        for label in labels:
            setting, rho = label.rsplit("|", 1)
            vals = [results[(label, r.seed)].final_l2 for r in runs if r.label == label]
            st = aggregate(vals)
            rows.append((setting, float(rho), st.mean, st.std))
        path = out_dir / "table3.csv"
        write_csv(path, ["setting", "rho", "mean", "std"], rows)
        return path
    if name == "table4":
        rows = []
        for model in MODELS:
            for rng in RHO_RANGES:
                label = f"{model}|{rng[0]:g}-{rng[1]:g}"
                vals = [results[(label, r.seed)].final_l2 for r in runs if r.label == label]
                st = aggregate(vals)
                rows.append((model, rng[0], rng[1], st.mean, st.std))
        path = out_dir / "table4.csv"
        write_csv(path, ["model", "rho_min", "rho_max", "mean", "std"], rows)
        return path
    if name == "fig3":
        run = runs[0]
        record = results[(run.label, run.seed)]
        problem = run.config.problem()
        network = Network.for_problem(run.config.network_config(run.seed), problem)
        cols = wavefront_profile(network, record.final_params, problem, t=0.002)
        header = ["x", "u_true", "u_pred", "f_lam0", "f_lam0.1", "f_lam1", "f_lam10"]
        data = np.column_stack([cols["x"], cols["u_true"], cols["u_pred"],
                                cols["f_lam0"], cols["f_lam0.1"], cols["f_lam1"],
                                cols["f_lam10"]])
        path = out_dir / "fig3.csv"
        write_csv(path, header, data)
        return path
    if name == "fig4":
        rows = []
        for r in runs:
            record = results[(r.label, r.seed)]
            for row in record.rows:
                rows.append((r.config.model, r.seed, row[0], row[1], row[-1]))
        path = out_dir / "fig4.csv"
        write_csv(path, ["model", "seed", "epoch", "loss_total", "test_mse"], rows)
        return path
    if name == "fig5":
        sweep = default_rho_sweep()
        per_model = {}
        for model in MODELS:
            curves = []
            for r in runs:
                if r.label != model:
                    continue
                record = results[(r.label, r.seed)]
                problem = r.config.problem()
                network = Network.for_problem(r.config.network_config(r.seed), problem)
                curves.append([l2 for _, l2 in evaluation.rho_sweep(
                    network, record.final_params, problem, rhos=sweep)])
            per_model[model] = np.asarray(curves)
        header = ["rho"]
        for model in MODELS:
            key = model.replace("-", "_")
            header += [f"{key}_median", f"{key}_q25", f"{key}_q75"]
        rows = []
        for i, rho in enumerate(sweep):
            row = [float(rho)]
            for model in MODELS:
                stats = aggregate(per_model[model][:, i])
                row += [stats.median, stats.q25, stats.q75]
            rows.append(tuple(row))
        path = out_dir / "fig5.csv"
        write_csv(path, header, rows)
        return path
    if name == "fig6":
        run = runs[0]
        record = results[(run.label, run.seed)]
        problem = run.config.problem()
        network = Network.for_problem(run.config.network_config(run.seed), problem)
        from .physics import analytical

        xs = np.linspace(problem.domain.x[0], problem.domain.x[1], 100)
        sqrt_rhos = np.linspace(np.sqrt(problem.rho_range[0]),
                                np.sqrt(problem.rho_range[1]), 100)
        rows = []
        t_final = problem.domain.t[1]
        for sr in sqrt_rhos:
            rho = sr * sr
            pred = network.value(record.final_params, xs, np.full_like(xs, t_final),
                                 np.full_like(xs, rho))
            truth = analytical(xs, t_final, rho, problem.mu)
            for x, p, tr in zip(xs, pred, truth):
                rows.append((float(x), float(sr), float(p), float(abs(p - tr))))
        path = out_dir / "fig6.csv"
        write_csv(path, ["x", "sqrt_rho", "u_pred", "abs_error"], rows)
        return path
    raise KeyError(name)


def run_preset(name: str, base: ExperimentConfig, seeds, out_dir: Path,
               workers: int = 1, dry_run: bool = False):
    """Plan, optionally execute, and emit one preset. Returns (runs, path|None)."""
    if name not in PRESET_NAMES:
        raise KeyError(name)
    runs = plan(name, base, list(seeds))
    if dry_run:
        return runs, None
    preset_dir = out_dir / name
    results = execute_all(runs, preset_dir / "runs", workers=workers)
    path = emit(name, runs, results, preset_dir)
    return runs, path
