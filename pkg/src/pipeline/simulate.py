"""Simulate step: slot-by-slot chorus-mode localization of moving targets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from src.chorus.geometry import Point2D
from src.chorus.locating import LocatorConfig, displacement_bound, locate_slot
from src.chorus.scenario import (
    AnonymousDistanceSet,
    GroundTruth,
    ScenarioRngs,
    deploy_receivers,
    init_motion,
    measure_slot,
    receiver_intensity,
    step_motion,
)
from src.chorus.scheduler import SlotSchedule, build_schedule, resolve_separation
from src.chorus.tracking import TargetFilter, TrackerConfig
from src.models import ExperimentConfig
from src.pipeline.base import PipelineStep, console
from src.utils.io import write_csv, write_json

TRUTH_HEADER = ("slot", "target_id", "x", "y")
ESTIMATE_HEADER = ("slot", "target_id", "x", "y", "flag")
SCHEDULE_HEADER = ("round", "slot_index", "target_ids")
DISTANCE_HEADER = ("slot", "receiver_id", "distance")
RECEIVER_HEADER = ("receiver_id", "x", "y")


class TargetLocator:
    """Labels, locates and filters every target that transmits in a slot.

    Shared by the live simulation and by replay of recorded distances.
    """

    def __init__(self, n_targets: int, receivers: Sequence[Point2D], locator: LocatorConfig,
                 tracker: TrackerConfig, arena: tuple[float, float] | None = None):
        self.receivers = list(receivers)
        self.locator = locator
        self.arena = arena
        self.filters = {
            tid: TargetFilter.create(tid, tracker, locator.v_e) for tid in range(n_targets)
        }

    def known(self) -> dict[int, Point2D]:
        """Last fix of every tracked target."""
        return {tid: f.fix for tid, f in self.filters.items() if f.known}

    def reach(self, slot: int) -> dict[int, float]:
        """How far each tracked target may have moved from its last fix by ``slot``."""
        return {tid: displacement_bound(self.locator, f.elapsed(slot))
                for tid, f in self.filters.items() if f.known}

    def pending(self) -> list[int]:
        return [tid for tid, f in self.filters.items() if not f.known]

    def process(self, slot: int, group: Sequence[int],
                measured: Sequence[AnonymousDistanceSet]) -> list[tuple]:
        """Estimate rows (slot, target_id, x, y, flag) for the targets in ``group``."""
        prev = {tid: self.filters[tid].fix if self.filters[tid].known else None
                for tid in group}
        elapsed = {tid: self.filters[tid].elapsed(slot) for tid in group}
        candidates = locate_slot(measured, group, prev, self.receivers, self.locator,
                                 elapsed, self.arena)
        rows = []
        for tid in group:
            filt = self.filters[tid]
            if filt.known:
                flag = filt.step(candidates[tid], slot)
            else:
                flag = filt.bootstrap(candidates[tid], slot)
            if flag is not None:
                rows.append((slot, tid, filt.estimate.x, filt.estimate.y, flag))
        return rows

    @property
    def losses(self) -> int:
        return sum(f.losses for f in self.filters.values())

    @property
    def comparisons(self) -> int:
        return sum(f.comparisons for f in self.filters.values())


@dataclass
class SimulationLog:
    truth: GroundTruth = field(default_factory=GroundTruth)
    estimates: list[tuple] = field(default_factory=list)
    schedule: list[tuple] = field(default_factory=list)
    distances: list[tuple] = field(default_factory=list)


class ChorusSimulation:
    """One deterministic experiment: schedule, measure, locate, filter, move."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        scenario = config.scenario
        self.rngs = ScenarioRngs.from_seed(scenario.seed)
        self.receivers = deploy_receivers(scenario, self.rngs.deploy)
        self.intensity = receiver_intensity(scenario, self.receivers)
        locator = config.locator.resolved(scenario)
        if config.scheduler.mode == "chorus":
            self.d_s = resolve_separation(config.scheduler, self.intensity,
                                          scenario.acoustic, seed=scenario.seed)
        else:
            self.d_s = None
        self.motion = init_motion(scenario, self.rngs.motion)
        self.targets = TargetLocator(scenario.n_targets, self.receivers, locator,
                                     config.tracker, scenario.arena)
        self.log = SimulationLog()
        self.slot = 0
        self.round = 0

    def plan(self) -> SlotSchedule:
        """Schedule one round from the last fixes.

        Group k transmits k slots after the round starts, so every reach
        grows by v_e per group.
        """
        return build_schedule(self.targets.known(), self.targets.pending(),
                              self.d_s or 1.0, self.config.scheduler.mode,
                              self.targets.reach(self.slot), self.targets.locator.v_e)

    def run(self, slots: int, on_round=None) -> SimulationLog:
        while self.slot < slots:
            schedule = self.plan()
            for index, group in enumerate(schedule):
                if self.slot >= slots:
                    break
                self.log.schedule.append(
                    (self.round, index, ";".join(str(t) for t in group))
                )
                self.run_slot(group)
            self.round += 1
            if on_round is not None:
                on_round(self.slot, slots)
        return self.log

    def run_slot(self, group: tuple[int, ...]):
        scenario = self.config.scenario
        slot = self.slot
        points = self.motion.points()
        self.log.truth.record(slot, points)

        transmitting = {tid: points[tid] for tid in group}
        measured = measure_slot(transmitting, self.receivers, scenario, slot, self.rngs.noise)
        for dset in measured:
            self.log.distances.extend((slot, dset.receiver_id, d) for d in dset.distances)
        self.log.estimates.extend(self.targets.process(slot, group, measured))

        self.motion = step_motion(self.motion, scenario, self.rngs.motion)
        self.slot += 1

    def state(self) -> dict:
        return {
            "slots": self.slot,
            "rounds": self.round,
            "n_targets": self.config.scenario.n_targets,
            "receivers": len(self.receivers),
            "intensity": self.intensity,
            "d_s": self.d_s,
            "mode": self.config.scheduler.mode,
            "losses": self.targets.losses,
            "comparisons": self.targets.comparisons,
        }


class SimulateStep(PipelineStep):
    name = "simulate"
    output_files = ["truth.csv", "estimates.csv", "schedule.csv",
                    "distances.csv", "receivers.csv", "simulation.json"]

    def execute(self, progress_callback=None, **kwargs):
        sim = ChorusSimulation(self.config)
        if sim.d_s is not None:
            console.print(f"    d_s = {sim.d_s:.3f} m over {len(sim.receivers)} receivers")
        total = self.config.run.slots

        log = sim.run(total, lambda done, slots: self._progress(progress_callback, done, slots))

        write_csv(self.workdir / "truth.csv", TRUTH_HEADER, log.truth.rows())
        write_csv(self.workdir / "estimates.csv", ESTIMATE_HEADER, log.estimates)
        write_csv(self.workdir / "schedule.csv", SCHEDULE_HEADER, log.schedule)
        write_csv(self.workdir / "distances.csv", DISTANCE_HEADER, log.distances)
        write_csv(self.workdir / "receivers.csv", RECEIVER_HEADER,
                  [(i, p.x, p.y) for i, p in enumerate(sim.receivers)])
        write_json(sim.state(), self.workdir / "simulation.json")
        console.print(f"    Simulated {sim.slot} slots in {sim.round} rounds, "
                      f"{len(log.estimates)} estimates")
