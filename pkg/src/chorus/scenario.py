"""Ground-truth random-walk targets, receiver deployment and per-slot ranging."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.chorus.detection import ArrivalEvent, simulate_comparator
from src.chorus.geometry import AcousticParams, Point2D


class ReceiverLayout(BaseModel):
    kind: Literal["grid", "explicit", "poisson"] = "grid"
    spacing: float = Field(default=2.0, gt=0)
    positions: list[tuple[float, float]] | None = None
    intensity: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _complete(self):
        if self.kind == "explicit" and not self.positions:
            raise ValueError("explicit layout needs positions")
        if self.kind == "poisson" and self.intensity is None:
            raise ValueError("poisson layout needs intensity")
        return self


class ScenarioConfig(BaseModel):
    arena: tuple[float, float] = (10.0, 10.0)
    receiver_layout: ReceiverLayout = Field(default_factory=ReceiverLayout)
    n_targets: int = Field(default=10, ge=1)
    slot_length: float = Field(default=0.1, gt=0)
    speed_mean: float = Field(default=1.0, ge=0)
    speed_std: float = Field(default=0.1, ge=0)
    turn_interval: float = Field(default=5.0, gt=0)
    noise_max_offset: float = Field(default=0.0, ge=0)
    acoustic: AcousticParams = Field(default_factory=AcousticParams)
    seed: int = 0

    @model_validator(mode="after")
    def _arena(self):
        if min(self.arena) <= 0:
            raise ValueError("arena sides must be positive")
        return self

    @property
    def turn_slots(self) -> int:
        return max(1, round(self.turn_interval / self.slot_length))


@dataclass(frozen=True, slots=True)
class AnonymousDistanceSet:
    receiver_id: int
    slot_index: int
    distances: tuple[float, ...]


@dataclass
class GroundTruth:
    """True positions of every target, keyed by slot."""

    positions: dict[int, dict[int, Point2D]] = field(default_factory=dict)

    def record(self, slot: int, points: dict[int, Point2D]):
        self.positions[slot] = dict(points)

    def rows(self) -> list[tuple[int, int, float, float]]:
        return [
            (slot, tid, p.x, p.y)
            for slot, points in sorted(self.positions.items())
            for tid, p in sorted(points.items())
        ]


@dataclass
class MotionState:
    positions: np.ndarray   # (n, 2) meters
    headings: np.ndarray    # radians
    speeds: np.ndarray      # m/s
    countdown: np.ndarray   # slots until the next turn

    def points(self) -> dict[int, Point2D]:
        return {i: Point2D.from_array(p) for i, p in enumerate(self.positions)}


@dataclass
class ScenarioRngs:
    """Independent streams so motion stays identical across noise/ω sweeps."""

    motion: np.random.Generator
    noise: np.random.Generator
    deploy: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> ScenarioRngs:
        motion, noise, deploy = np.random.SeedSequence(seed).spawn(3)
        return cls(np.random.default_rng(motion), np.random.default_rng(noise),
                   np.random.default_rng(deploy))


def deploy_receivers(config: ScenarioConfig, rng: np.random.Generator) -> list[Point2D]:
    width, height = config.arena
    layout = config.receiver_layout
    if layout.kind == "explicit":
        return [Point2D(float(x), float(y)) for x, y in layout.positions]
    if layout.kind == "poisson":
        count = rng.poisson(layout.intensity * width * height)
        xs = rng.uniform(0.0, width, count)
        ys = rng.uniform(0.0, height, count)
        return [Point2D(float(x), float(y)) for x, y in zip(xs, ys)]
    xs = np.arange(0.0, width + 1e-9, layout.spacing)
    ys = np.arange(0.0, height + 1e-9, layout.spacing)
    return [Point2D(float(x), float(y)) for y in ys for x in xs]


def receiver_intensity(config: ScenarioConfig, receivers: list[Point2D]) -> float:
    """Receivers per square meter for the d_s computation."""
    layout = config.receiver_layout
    if layout.kind == "grid":
        return 1.0 / layout.spacing ** 2
    if layout.kind == "poisson":
        return layout.intensity
    width, height = config.arena
    return len(receivers) / (width * height)


def _draw_speeds(config: ScenarioConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.maximum(0.0, rng.normal(config.speed_mean, config.speed_std, n))


def init_motion(config: ScenarioConfig, rng: np.random.Generator) -> MotionState:
    n = config.n_targets
    width, height = config.arena
    positions = np.column_stack((rng.uniform(0.0, width, n), rng.uniform(0.0, height, n)))
    headings = rng.uniform(0.0, 2.0 * np.pi, n)
    return MotionState(positions, headings, _draw_speeds(config, rng, n),
                       np.full(n, config.turn_slots, dtype=int))


def _reflect(value: float, limit: float, heading: float, vertical: bool) -> tuple[float, float]:
    while value < 0.0 or value > limit:
        value = -value if value < 0.0 else 2.0 * limit - value
        heading = -heading if vertical else math.pi - heading
    return value, heading


def step_motion(state: MotionState, config: ScenarioConfig,
                rng: np.random.Generator) -> MotionState:
    """Advance every target by one slot, reflecting at the arena walls."""
    width, height = config.arena
    step = state.speeds * config.slot_length
    positions = state.positions + np.column_stack(
        (step * np.cos(state.headings), step * np.sin(state.headings))
    )
    headings = state.headings.copy()
    for i in range(len(positions)):
        positions[i, 0], headings[i] = _reflect(positions[i, 0], width, headings[i], False)
        positions[i, 1], headings[i] = _reflect(positions[i, 1], height, headings[i], True)
    headings = np.mod(headings, 2.0 * np.pi)

    countdown = state.countdown - 1
    speeds = state.speeds.copy()
    turning = countdown <= 0
    if turning.any():
        k = int(turning.sum())
        headings[turning] = rng.uniform(0.0, 2.0 * np.pi, k)
        speeds[turning] = _draw_speeds(config, rng, k)
        countdown[turning] = config.turn_slots
    return MotionState(positions, headings, speeds, countdown)


def measure_slot(true_positions: dict[int, Point2D], receivers: list[Point2D],
                 config: ScenarioConfig, slot_index: int,
                 rng: np.random.Generator) -> list[AnonymousDistanceSet]:
    """Anonymous distances heard by every receiver when the given targets transmit."""
    acoustic = config.acoustic
    ids = list(true_positions)
    sources = np.array([true_positions[i].as_array() for i in ids]).reshape(-1, 2)
    result = []
    for rid, receiver in enumerate(receivers):
        dists = np.linalg.norm(sources - receiver.as_array(), axis=1) if ids else np.empty(0)
        arrivals = []
        by_time = {}
        for tid, d in zip(ids, dists):
            if d <= acoustic.r:
                t = float(d) / acoustic.v_u
                arrivals.append(ArrivalEvent(t, tid))
                by_time.setdefault(t, float(d))
        heard = [by_time[toa.time] for toa in simulate_comparator(arrivals, acoustic)]
        if heard and config.noise_max_offset > 0:
            offsets = rng.uniform(0.0, config.noise_max_offset, len(heard))
            heard = [d + float(o) for d, o in zip(heard, offsets)]
        if len(heard) > 1:
            heard = [heard[i] for i in rng.permutation(len(heard))]
        result.append(AnonymousDistanceSet(rid, slot_index, tuple(heard)))
    return result
