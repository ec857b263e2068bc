"""Replay step: re-run the locator and filter on recorded distances."""

from __future__ import annotations

import hashlib
from collections import defaultdict
from pathlib import Path

from src.chorus.geometry import Point2D
from src.chorus.scenario import AnonymousDistanceSet
from src.pipeline.base import PipelineStep, console
from src.pipeline.metrics import EstimateRow, compute_errors, read_truth
from src.pipeline.simulate import ESTIMATE_HEADER, TargetLocator
from src.utils.io import read_csv, write_csv


class ReplayFormatError(ValueError):
    """A recorded CSV is missing columns or holds values that cannot be parsed."""


def _load(path: Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.exists():
        raise ReplayFormatError(f"missing recording: {path.name}")
    rows = read_csv(path)
    if rows and not set(columns) <= set(rows[0]):
        raise ReplayFormatError(f"{path.name} needs columns {', '.join(columns)}")
    return rows


def load_receivers(path: Path) -> list[Point2D]:
    rows = _load(path, ("receiver_id", "x", "y"))
    try:
        by_id = {int(r["receiver_id"]): Point2D(float(r["x"]), float(r["y"])) for r in rows}
    except (TypeError, ValueError) as exc:
        raise ReplayFormatError(f"{path.name}: {exc}") from exc
    if sorted(by_id) != list(range(len(by_id))):
        raise ReplayFormatError(f"{path.name}: receiver ids must be 0..{len(by_id) - 1}")
    return [by_id[i] for i in range(len(by_id))]


def load_schedule(path: Path) -> list[tuple[int, ...]]:
    rows = _load(path, ("round", "slot_index", "target_ids"))
    try:
        return [tuple(int(t) for t in r["target_ids"].split(";") if t) for r in rows]
    except (TypeError, ValueError, AttributeError) as exc:
        raise ReplayFormatError(f"{path.name}: {exc}") from exc


def load_distances(path: Path, n_receivers: int, n_slots: int) -> dict[int, dict[int, list[float]]]:
    rows = _load(path, ("slot", "receiver_id", "distance"))
    by_slot: dict[int, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for line, r in enumerate(rows, start=2):
        try:
            slot, rid, d = int(r["slot"]), int(r["receiver_id"]), float(r["distance"])
        except (TypeError, ValueError) as exc:
            raise ReplayFormatError(f"{path.name} line {line}: {exc}") from exc
        if not 0 <= rid < n_receivers:
            raise ReplayFormatError(f"{path.name} line {line}: unknown receiver {rid}")
        if not 0 <= slot < n_slots:
            raise ReplayFormatError(f"{path.name} line {line}: slot {slot} not in the schedule")
        if d < 0:
            raise ReplayFormatError(f"{path.name} line {line}: negative distance")
        by_slot[slot][rid].append(d)
    return by_slot


RECORDINGS = ("receivers.csv", "schedule.csv", "distances.csv", "truth.csv")


def recording_digest(source: Path) -> str:
    """sha256 over the recorded CSVs present in ``source``."""
    digest = hashlib.sha256()
    for name in RECORDINGS:
        path = source / name
        if path.exists():
            digest.update(name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


class ReplayStep(PipelineStep):
    name = "replay"
    output_files = ["replay_estimates.csv"]
    optional_files = ["replay_errors.csv"]

    def _source(self, source: Path | None) -> Path:
        return Path(source) if source is not None else self.workdir

    def stamp(self, source: Path | None = None, **kwargs) -> dict:
        resolved = self._source(source).resolve()
        stamp = super().stamp(source=resolved, **kwargs)
        stamp["digest"] = recording_digest(resolved)
        return stamp

    def expected_outputs(self, source: Path | None = None, **kwargs) -> list[str]:
        if (self._source(source) / "truth.csv").exists():
            return [*self.output_files, *self.optional_files]
        return list(self.output_files)

    def execute(self, source: Path | None = None, **kwargs):
        source = self._source(source)
        receivers = load_receivers(source / "receivers.csv")
        schedule = load_schedule(source / "schedule.csv")
        distances = load_distances(source / "distances.csv", len(receivers), len(schedule))

        n_targets = 1 + max((t for slot in schedule for t in slot), default=-1)
        scenario = self.config.scenario
        targets = TargetLocator(n_targets, receivers, self.config.locator.resolved(scenario),
                                self.config.tracker, scenario.arena)
        estimates = []
        for slot, group in enumerate(schedule):
            heard = distances.get(slot, {})
            measured = [
                AnonymousDistanceSet(rid, slot, tuple(heard.get(rid, ())))
                for rid in range(len(receivers))
            ]
            estimates.extend(targets.process(slot, group, measured))
        write_csv(self.workdir / "replay_estimates.csv", ESTIMATE_HEADER, estimates)

        truth_path = source / "truth.csv"
        if truth_path.exists():
            rows = [EstimateRow(*row) for row in estimates]
            write_csv(self.workdir / "replay_errors.csv", ("slot", "target_id", "error"),
                      compute_errors(rows, read_truth(truth_path)))
        console.print(f"    Replayed {len(schedule)} slots for {n_targets} targets")
