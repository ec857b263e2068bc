"""Probabilistic particle filter over candidate positions.

Each target keeps l tracks. Every slot the tracks are crossed with the
target's candidate positions, each particle is scored by the speed and
acceleration densities, and the best l particles survive.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import norm

from src.chorus.geometry import Point2D, distance
from src.chorus.locating import CandidatePosition

Flag = Literal["located", "predicted"]


class TrackerConfig(BaseModel):
    n_tracks: int = Field(default=5, ge=1)          # l
    alpha: float = Field(default=0.05, gt=0, le=1)  # EMA weight of UpdatePDF
    floor_std: float = Field(default=0.05, gt=0)    # m/slot
    max_coast: int = Field(default=5, ge=0)


@dataclass(frozen=True)
class MotionPdf:
    """Gaussian density with exponentially weighted moments."""

    mean: float
    std: float
    floor_std: float
    count: int = 0
    var: float | None = None

    def __post_init__(self):
        if self.var is None:
            object.__setattr__(self, "var", self.std ** 2)

    def density(self, values):
        return norm.pdf(values, loc=self.mean, scale=self.std)


@dataclass(frozen=True)
class MotionPdfs:
    speed: MotionPdf
    accel: MotionPdf

    @classmethod
    def initial(cls, v_e: float, floor_std: float) -> MotionPdfs:
        spread = max(v_e / 2.0, floor_std)
        return cls(MotionPdf(v_e / 2.0, spread, floor_std), MotionPdf(0.0, spread, floor_std))


@dataclass
class Track:
    positions: list[Point2D]
    slots: list[int]
    last_speed: float | None = None

    @property
    def end(self) -> Point2D:
        return self.positions[-1]

    def extended(self, position: Point2D, slot: int, speed: float | None) -> Track:
        return Track(self.positions + [position], self.slots + [slot], speed)

    def coasted(self, slot: int) -> Track:
        """Extend by the last per-slot displacement vector."""
        if len(self.positions) < 2:
            return self.extended(self.end, slot, self.last_speed)
        p0, p1 = self.positions[-2], self.positions[-1]
        span = self.slots[-1] - self.slots[-2]
        steps = slot - self.slots[-1]
        dx = (p1.x - p0.x) / span * steps
        dy = (p1.y - p0.y) / span * steps
        return self.extended(Point2D(p1.x + dx, p1.y + dy), slot, self.last_speed)


@dataclass(frozen=True, slots=True)
class Particle:
    parent: int
    candidate: int
    v: float
    a: float
    likelihood: float
    residue: float


@dataclass
class ComparisonCounter:
    count: int = 0

    def key(self, residue_first: bool = False):
        def by_likelihood(p: Particle, q: Particle) -> int:
            if p.likelihood != q.likelihood:
                return -1 if p.likelihood > q.likelihood else 1
            return 0

        def by_residue(p: Particle, q: Particle) -> int:
            if p.residue != q.residue:
                return -1 if p.residue < q.residue else 1
            return 0

        order = (by_residue, by_likelihood) if residue_first else (by_likelihood, by_residue)

        def compare(p: Particle, q: Particle) -> int:
            self.count += 1
            for rule in order:
                result = rule(p, q)
                if result:
                    return result
            return 0
        return functools.cmp_to_key(compare)


@dataclass
class FilterStep:
    tracks: list[Track]
    estimate: Point2D
    pdfs: MotionPdfs
    flag: Flag
    comparisons: int = 0


def update_pdf(pdf: MotionPdf, observations: Sequence[float], alpha: float = 0.05) -> MotionPdf:
    if len(observations) == 0:
        return pdf
    mean, var = pdf.mean, pdf.var
    for value in observations:
        diff = value - mean
        incr = alpha * diff
        mean += incr
        var = (1.0 - alpha) * (var + diff * incr)
    std = max(float(np.sqrt(var)), pdf.floor_std)
    return replace(pdf, mean=float(mean), std=std, var=float(var),
                   count=pdf.count + len(observations))


def evaluate_likelihood(pdfs: MotionPdfs, v, a):
    """p_v(v) · p_a(a); accepts scalars or arrays."""
    return pdfs.speed.density(v) * pdfs.accel.density(a)


def filter_step(tracks: Sequence[Track], candidates: Sequence[CandidatePosition],
                pdfs: MotionPdfs, slot: int, config: TrackerConfig,
                counter: ComparisonCounter | None = None) -> FilterStep:
    """Cross tracks with candidates and keep the best l particles.

    Tracks fresh from a bootstrap carry no speed yet, so the first step ranks
    by residue and uses the likelihood only to break ties.
    """
    counter = counter or ComparisonCounter()
    if not candidates:
        coasted = [t.coasted(slot) for t in tracks]
        return FilterStep(coasted, coasted[0].end, pdfs, "predicted", 0)

    parents, cands, speeds, accels = [], [], [], []
    for i, track in enumerate(tracks):
        span = max(1, slot - track.slots[-1])
        for j, cand in enumerate(candidates):
            v = distance(cand.position, track.end) / span
            a = 0.0 if track.last_speed is None else v - track.last_speed
            parents.append(i)
            cands.append(j)
            speeds.append(v)
            accels.append(a)

    likelihoods = evaluate_likelihood(pdfs, np.array(speeds), np.array(accels))
    particles = [
        Particle(p, c, v, a, float(lk), candidates[c].residue)
        for p, c, v, a, lk in zip(parents, cands, speeds, accels, likelihoods)
    ]
    start = counter.count
    history = any(t.last_speed is not None for t in tracks)
    ranked = sorted(particles, key=counter.key(residue_first=not history))
    kept = ranked[: min(config.n_tracks, len(ranked))]

    new_tracks = [
        tracks[p.parent].extended(candidates[p.candidate].position, slot, p.v) for p in kept
    ]
    new_pdfs = MotionPdfs(
        update_pdf(pdfs.speed, [p.v for p in kept], config.alpha),
        update_pdf(pdfs.accel, [p.a for p in kept], config.alpha),
    )
    return FilterStep(new_tracks, new_tracks[0].end, new_pdfs, "located", counter.count - start)


@dataclass
class TargetFilter:
    """Filter state of one target across slots, including bootstrap and loss."""

    target_id: int
    config: TrackerConfig
    pdfs: MotionPdfs
    tracks: list[Track] = field(default_factory=list)
    status: Literal["unknown", "tracking", "lost"] = "unknown"
    estimate: Point2D | None = None
    fix: Point2D | None = None  # last located position
    last_fix_slot: int | None = None
    coasting: int = 0
    losses: int = 0
    comparisons: int = 0

    @classmethod
    def create(cls, target_id: int, config: TrackerConfig, v_e: float) -> TargetFilter:
        return cls(target_id, config, MotionPdfs.initial(v_e, config.floor_std))

    @property
    def known(self) -> bool:
        return self.status == "tracking"

    def elapsed(self, slot: int) -> int:
        return 1 if self.last_fix_slot is None else max(1, slot - self.last_fix_slot)

    def bootstrap(self, candidates: Sequence[CandidatePosition], slot: int) -> Flag | None:
        """Start l identical tracks from an exclusive-slot fix."""
        if not candidates:
            return None
        position = candidates[0].position
        self.tracks = [Track([position], [slot]) for _ in range(self.config.n_tracks)]
        self.status = "tracking"
        self.estimate = position
        self.fix = position
        self.last_fix_slot = slot
        self.coasting = 0
        return "located"

    def step(self, candidates: Sequence[CandidatePosition], slot: int) -> Flag:
        counter = ComparisonCounter()
        result = filter_step(self.tracks, candidates, self.pdfs, slot, self.config, counter)
        self.comparisons += result.comparisons
        self.tracks = result.tracks
        self.pdfs = result.pdfs
        self.estimate = result.estimate
        if result.flag == "located":
            self.fix = result.estimate
            self.last_fix_slot = slot
            self.coasting = 0
        else:
            self.coasting += 1
            if self.coasting >= self.config.max_coast:
                self.status = "lost"
                self.losses += 1
        return result.flag
