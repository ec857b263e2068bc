"""Consistent position generation from anonymous distances.

Distances are labeled to targets by historical consistency, triples from
distinct receivers are trilaterated, each solution grows its support with
the other receivers' consistent distances, and candidates are ranked by the
mean squared residue of that support.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.chorus.geometry import Point2D, distance
from src.chorus.scenario import AnonymousDistanceSet, ScenarioConfig


MIN_V_E = 0.01  # m per slot; static scenes still need a labeling window
SUPPORT_FLOOR = 0.01  # m; support gate above the noise band
RESIDUE_FLOOR = 1e-4  # m²


class DegenerateGeometryError(ValueError):
    """Supports are collinear or too ill-conditioned to trilaterate."""


class LocatorConfig(BaseModel):
    v_e: float | None = Field(default=None, gt=0)        # m per slot; None derives from the scenario
    n_candidates: int = Field(default=5, ge=1)           # N_c
    max_combinations: int = Field(default=200, ge=1)
    support_gate: float | None = Field(default=None, gt=0)  # None means 2·l_o + 1 cm
    slack: float | None = Field(default=None, ge=0)       # None means 2·l_o
    max_residue: float | None = Field(default=None, gt=0)  # None means l_o² + 1e-4
    arena_margin: float = Field(default=0.5, ge=0)
    gauss_newton_steps: int = Field(default=1, ge=0)
    max_condition: float = Field(default=1e6, gt=1)

    def resolved(self, scenario: ScenarioConfig) -> LocatorConfig:
        """Fill the scenario-dependent defaults.

        The slack and the support gate cover a bounded positive offset on the
        current distance and the same error carried by the previous fix. No
        distance set that belongs to a single target can have a mean squared
        residue above l_o², so ``max_residue`` rejects supports that mix
        targets.
        """
        v_e = self.v_e or max(
            (scenario.speed_mean + 4.0 * scenario.speed_std) * scenario.slot_length, MIN_V_E
        )
        noise = scenario.noise_max_offset
        return self.model_copy(update={
            "v_e": v_e,
            "support_gate": self.support_gate or 2.0 * noise + SUPPORT_FLOOR,
            "slack": 2.0 * noise if self.slack is None else self.slack,
            "max_residue": self.max_residue or noise ** 2 + RESIDUE_FLOOR,
        })


@dataclass(frozen=True, slots=True)
class LabeledDistance:
    receiver_id: int
    distance: float
    candidate_sources: frozenset[int]


@dataclass(frozen=True, slots=True)
class CandidatePosition:
    target_id: int
    position: Point2D
    residue: float
    support: tuple[tuple[int, float], ...]


def displacement_bound(config: LocatorConfig, elapsed: int = 1) -> float:
    return config.v_e * max(1, elapsed) + (config.slack or 0.0)


def label_distances(distances: Iterable[AnonymousDistanceSet],
                    prev_positions: dict[int, Point2D | None],
                    receivers: Sequence[Point2D], config: LocatorConfig,
                    elapsed: dict[int, int] | None = None) -> list[LabeledDistance]:
    """Label each distance with every target whose previous position explains it.

    A target without a previous position takes every distance; the scheduler
    only lets such a target transmit alone.
    """
    elapsed = elapsed or {}
    labeled = []
    for dset in distances:
        receiver = receivers[dset.receiver_id]
        for d in dset.distances:
            sources = set()
            for tid, prev in prev_positions.items():
                if prev is None:
                    sources.add(tid)
                elif abs(d - distance(receiver, prev)) <= displacement_bound(config, elapsed.get(tid, 1)):
                    sources.add(tid)
            labeled.append(LabeledDistance(dset.receiver_id, d, frozenset(sources)))
    return labeled


def trilaterate(supports: Sequence[tuple[Point2D, float]], iterations: int = 1,
                max_condition: float = 1e6) -> Point2D:
    """Least-squares position from ≥3 (receiver, distance) pairs.

    Linearised by subtracting the first circle equation, then refined with
    Gauss–Newton steps on Σ(D_i − |x − r_i|)².
    """
    if len(supports) < 3:
        raise DegenerateGeometryError(f"need at least 3 supports, got {len(supports)}")
    pts = np.array([p.as_array() for p, _ in supports])
    dists = np.array([d for _, d in supports], dtype=float)

    A = 2.0 * (pts[1:] - pts[0])
    b = dists[0] ** 2 - dists[1:] ** 2 + np.sum(pts[1:] ** 2, axis=1) - np.sum(pts[0] ** 2)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > max_condition:
        raise DegenerateGeometryError(f"ill-conditioned supports (cond={cond:.3g})")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)

    for _ in range(iterations):
        diff = x - pts
        ranges = np.linalg.norm(diff, axis=1)
        if np.any(ranges < 1e-12):
            break
        J = diff / ranges[:, None]
        step, *_ = np.linalg.lstsq(J, dists - ranges, rcond=None)
        x = x + step
    if not np.all(np.isfinite(x)):
        raise DegenerateGeometryError("trilateration diverged")
    return Point2D.from_array(x)


def self_consistency(x: Point2D, supports: Sequence[tuple[Point2D, float]]) -> float:
    if not supports:
        return 0.0
    return sum((d - distance(x, p)) ** 2 for p, d in supports) / len(supports)


def generate_candidates(labeled: Sequence[LabeledDistance], target_id: int,
                        receivers: Sequence[Point2D], config: LocatorConfig,
                        prev_position: Point2D | None = None, elapsed: int = 1,
                        arena: tuple[float, float] | None = None) -> list[CandidatePosition]:
    """Top-N_c candidate positions for one target, residue ascending.

    Candidates whose residue exceeds ``max_residue`` are implausible and never
    returned; an empty list makes the filter coast.
    """
    mine = [ld for ld in labeled if target_id in ld.candidate_sources]
    if len({ld.receiver_id for ld in mine}) < 3:
        return []

    if prev_position is None:
        deviation = [0.0] * len(mine)
    else:
        deviation = [abs(ld.distance - distance(receivers[ld.receiver_id], prev_position))
                     for ld in mine]

    triples = [
        combo for combo in itertools.combinations(range(len(mine)), 3)
        if len({mine[i].receiver_id for i in combo}) == 3
    ]
    triples.sort(key=lambda combo: (sum(deviation[i] for i in combo), combo))
    triples = triples[: config.max_combinations]

    by_receiver: dict[int, list[float]] = {}
    for ld in mine:
        by_receiver.setdefault(ld.receiver_id, []).append(ld.distance)

    bound = displacement_bound(config, elapsed) if prev_position is not None else math.inf
    best: dict[tuple, CandidatePosition] = {}
    for combo in triples:
        triple = [(mine[i].receiver_id, mine[i].distance) for i in combo]
        try:
            x = trilaterate(_resolve(triple, receivers), config.gauss_newton_steps,
                            config.max_condition)
        except DegenerateGeometryError:
            continue
        support = _grow_support(x, triple, by_receiver, receivers, config.support_gate)
        if len(support) > 3:
            try:
                x = trilaterate(_resolve(support, receivers), config.gauss_newton_steps,
                                config.max_condition)
            except DegenerateGeometryError:
                pass
        if arena is not None and not _inside(x, arena, config.arena_margin):
            continue
        if prev_position is not None and distance(x, prev_position) > bound:
            continue
        key = tuple(sorted(support))
        residue = self_consistency(x, _resolve(support, receivers))
        if config.max_residue is not None and residue > config.max_residue:
            continue
        if key not in best or residue < best[key].residue:
            best[key] = CandidatePosition(target_id, x, residue, key)

    ranked = sorted(best.values(), key=lambda c: (c.residue, -len(c.support), c.support))
    return ranked[: config.n_candidates]


def locate_slot(distances: Sequence[AnonymousDistanceSet], scheduled: Sequence[int],
                prev_positions: dict[int, Point2D | None], receivers: Sequence[Point2D],
                config: LocatorConfig, elapsed: dict[int, int] | None = None,
                arena: tuple[float, float] | None = None) -> dict[int, list[CandidatePosition]]:
    """Label one slot's distances and generate candidates for each scheduled target."""
    elapsed = elapsed or {}
    prev = {tid: prev_positions.get(tid) for tid in scheduled}
    labeled = label_distances(distances, prev, receivers, config, elapsed)
    return {
        tid: generate_candidates(labeled, tid, receivers, config, prev[tid],
                                 elapsed.get(tid, 1), arena)
        for tid in scheduled
    }


def _resolve(pairs, receivers) -> list[tuple[Point2D, float]]:
    return [(receivers[rid], d) for rid, d in pairs]


def _grow_support(x: Point2D, triple, by_receiver: dict[int, list[float]],
                  receivers: Sequence[Point2D], gate: float) -> list[tuple[int, float]]:
    used = {rid for rid, _ in triple}
    support = list(triple)
    for rid, dists in by_receiver.items():
        if rid in used:
            continue
        predicted = distance(x, receivers[rid])
        nearest = min(dists, key=lambda d: abs(d - predicted))
        if abs(nearest - predicted) <= gate:
            support.append((rid, nearest))
    return support


def _inside(x: Point2D, arena: tuple[float, float], margin: float) -> bool:
    width, height = arena
    return -margin <= x.x <= width + margin and -margin <= x.y <= height + margin
