"""Metrics step: error CDF, scheduling efficiency and tracking health."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from src.chorus.geometry import Point2D
from src.models import MetricsReport
from src.pipeline.base import PipelineStep, console
from src.utils.io import read_csv, read_json, write_csv, write_json


class AlignmentError(ValueError):
    """Estimates refer to slots or targets missing from the ground truth."""


@dataclass(frozen=True, slots=True)
class EstimateRow:
    slot: int
    target_id: int
    x: float
    y: float
    flag: str = "located"


@dataclass(frozen=True)
class ErrorCdf:
    """Sorted errors with empirical quantiles."""

    errors: np.ndarray

    def quantile(self, q: float) -> float:
        if len(self.errors) == 0:
            return 0.0
        return float(np.quantile(self.errors, q))

    def probabilities(self) -> np.ndarray:
        n = len(self.errors)
        return np.arange(1, n + 1) / n if n else np.empty(0)


def compute_errors(estimates: Iterable[EstimateRow],
                   truth: Mapping[tuple[int, int], Point2D]) -> list[tuple[int, int, float]]:
    """Per located estimate, the distance to the true position of the same target."""
    rows = []
    for est in estimates:
        if est.flag != "located":
            continue
        key = (est.slot, est.target_id)
        if key not in truth:
            raise AlignmentError(f"no ground truth for target {est.target_id} at slot {est.slot}")
        p = truth[key]
        rows.append((est.slot, est.target_id, float(np.hypot(est.x - p.x, est.y - p.y))))
    return rows


def compute_error_cdf(estimates: Iterable[EstimateRow],
                      truth: Mapping[tuple[int, int], Point2D]) -> ErrorCdf:
    errors = np.sort(np.array([e for _, _, e in compute_errors(estimates, truth)], dtype=float))
    return ErrorCdf(errors)


def compute_efficiency(schedule_log: Sequence[Sequence[int]]) -> float:
    """Mean number of targets per slot."""
    if len(schedule_log) == 0:
        raise ValueError("schedule log is empty")
    return float(np.mean([len(slot) for slot in schedule_log]))


def mean_update_interval(estimates: Iterable[EstimateRow]) -> float | None:
    fixes: dict[int, list[int]] = defaultdict(list)
    for est in estimates:
        if est.flag == "located":
            fixes[est.target_id].append(est.slot)
    gaps = [b - a for slots in fixes.values() for a, b in zip(sorted(slots), sorted(slots)[1:])]
    return float(np.mean(gaps)) if gaps else None


def summarize(estimates: Sequence[EstimateRow], truth: Mapping[tuple[int, int], Point2D],
              schedule_log: Sequence[Sequence[int]], losses: int = 0,
              d_s: float | None = None) -> MetricsReport:
    cdf = compute_error_cdf(estimates, truth)
    predicted = sum(1 for e in estimates if e.flag == "predicted")
    scheduled = sum(len(slot) for slot in schedule_log)
    return MetricsReport(
        p50=cdf.quantile(0.5),
        p90=cdf.quantile(0.9),
        p99=cdf.quantile(0.99),
        located=len(cdf.errors),
        efficiency=compute_efficiency(schedule_log),
        predicted_fraction=predicted / len(estimates) if estimates else 0.0,
        loss_rate=losses / scheduled if scheduled else 0.0,
        losses=losses,
        mean_update_interval=mean_update_interval(estimates),
        slots=len(schedule_log),
        d_s=d_s,
    )


def read_estimates(path) -> list[EstimateRow]:
    return [
        EstimateRow(int(r["slot"]), int(r["target_id"]), float(r["x"]), float(r["y"]), r["flag"])
        for r in read_csv(path)
    ]


def read_truth(path) -> dict[tuple[int, int], Point2D]:
    return {
        (int(r["slot"]), int(r["target_id"])): Point2D(float(r["x"]), float(r["y"]))
        for r in read_csv(path)
    }


def read_schedule(path) -> list[tuple[int, ...]]:
    return [
        tuple(int(t) for t in r["target_ids"].split(";") if t)
        for r in read_csv(path)
    ]


class MetricsStep(PipelineStep):
    name = "metrics"
    output_files = ["errors.csv", "summary.json"]

    def execute(self, **kwargs):
        estimates = read_estimates(self.workdir / "estimates.csv")
        truth = read_truth(self.workdir / "truth.csv")
        schedule = read_schedule(self.workdir / "schedule.csv")
        state = read_json(self.workdir / "simulation.json")

        write_csv(self.workdir / "errors.csv", ("slot", "target_id", "error"),
                  compute_errors(estimates, truth))
        report = summarize(estimates, truth, schedule, state.get("losses", 0), state.get("d_s"))
        write_json(report.model_dump(), self.workdir / "summary.json")
        console.print(
            f"    p50={report.p50 * 100:.2f} cm  p90={report.p90 * 100:.2f} cm  "
            f"efficiency={report.efficiency:.2f} targets/slot"
        )
