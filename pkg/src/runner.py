"""Runs pipeline steps for one experiment, and sweeps experiments across processes."""

from __future__ import annotations

import copy
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from src.config import apply_cli_overrides, build_config
from src.models import ExperimentConfig, ExperimentPreset, MetricsReport, SweepRow, SweepVariable
from src.pipeline import AnalyzeStep, MetricsStep, ReplayStep, SimulateStep
from src.pipeline.base import ProgressCallback, set_quiet
from src.utils.io import read_json, write_csv, write_json

STEPS_ORDER = ["simulate", "metrics"]

STEP_MAP = {
    "simulate": SimulateStep,
    "metrics": MetricsStep,
    "analyze": AnalyzeStep,
    "replay": ReplayStep,
}

SWEEP_HEADER = ("variable", "value", "seed", "p50", "p90", "p99", "efficiency",
                "predicted_fraction", "loss_rate", "d_s")


def run_steps(config: ExperimentConfig, workdir: Path, steps: Sequence[str],
              force: bool = False, progress_callback: ProgressCallback | None = None,
              **kwargs):
    """Run the named steps in order; a failing step re-raises after cleaning its outputs."""
    for step_name in steps:
        step = STEP_MAP[step_name](workdir=workdir, config=config, force=force)
        step.run(progress_callback=progress_callback, **kwargs)


def run_experiment(config: ExperimentConfig, workdir: Path, force: bool = False,
                   progress_callback: ProgressCallback | None = None) -> MetricsReport:
    workdir.mkdir(parents=True, exist_ok=True)
    run_steps(config, workdir, STEPS_ORDER, force, progress_callback)
    return MetricsReport.model_validate(read_json(workdir / "summary.json"))


def sweep_jobs(raw: dict, preset: ExperimentPreset, seeds: Sequence[int],
               workdir: Path) -> list[tuple]:
    """(variable, value, seed, config dict, workdir) per sweep point."""
    values = preset.values if preset.sweep is not SweepVariable.none else [None]
    jobs = []
    for value in values:
        for seed in seeds:
            overrides = {"seed": seed}
            if preset.sweep is SweepVariable.omega:
                overrides["omega"] = value
            elif preset.sweep is SweepVariable.noise:
                overrides["noise"] = value
            config = apply_cli_overrides(copy.deepcopy(raw), **overrides)
            label = "base" if value is None else f"{preset.sweep.value}_{value:g}"
            jobs.append((preset.sweep, value, seed, config, workdir / label / f"seed_{seed}"))
    return jobs


def _run_job(job: tuple, force: bool, quiet: bool) -> SweepRow:
    variable, value, seed, raw, workdir = job
    set_quiet(quiet)
    report = run_experiment(build_config(raw), workdir, force)
    return SweepRow(variable=variable, value=value if value is not None else 0.0,
                    seed=seed, report=report)


def run_sweep(raw: dict, preset: ExperimentPreset, seeds: Sequence[int], workdir: Path,
              workers: int = 1, force: bool = False, quiet: bool = True) -> list[SweepRow]:
    """Run every (value, seed) pair, one experiment per worker process."""
    jobs = sweep_jobs(raw, preset, seeds, workdir)
    for job in jobs:
        build_config(job[3])
    if workers <= 1:
        rows = [_run_job(job, force, quiet) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_job, jobs, [force] * len(jobs), [quiet] * len(jobs)))

    write_csv(workdir / "sweep.csv", SWEEP_HEADER, [
        (row.variable.value, row.value, row.seed, row.report.p50, row.report.p90,
         row.report.p99, row.report.efficiency, row.report.predicted_fraction,
         row.report.loss_rate, "" if row.report.d_s is None else row.report.d_s)
        for row in rows
    ])
    write_json({"preset": preset.name, "variable": preset.sweep.value,
                "values": aggregate_sweep(rows)}, workdir / "sweep.json")
    return rows


def aggregate_sweep(rows: Sequence[SweepRow]) -> list[dict]:
    """Seed-averaged metrics per sweep value, in ascending value order."""
    by_value: dict[float, list[MetricsReport]] = {}
    for row in rows:
        by_value.setdefault(row.value, []).append(row.report)
    summary = []
    for value in sorted(by_value):
        reports = by_value[value]
        summary.append({
            "value": value,
            "seeds": len(reports),
            **{
                key: float(np.mean([getattr(r, key) for r in reports]))
                for key in ("p50", "p90", "p99", "efficiency", "predicted_fraction", "loss_rate")
            },
        })
    return summary
