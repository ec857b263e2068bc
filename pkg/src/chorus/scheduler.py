"""Location-based time-slot assignment.

Known targets are split into d_s-separated groups that share a slot; every
target without a usable location gets a slot of its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.chorus.feasibility import solve_separation_distance, solve_tdr_separation
from src.chorus.geometry import AcousticParams, Point2D

ScheduleMode = Literal["chorus", "exclusive"]


class SeparationConfig(BaseModel):
    method: Literal["poisson_bound", "tdr", "fixed"] = "tdr"
    target_prob: float | None = Field(default=None, gt=0, lt=1)
    neighbors: int = Field(default=2, ge=1, le=6)
    d_s: float | None = Field(default=None, gt=0)
    samples: int = Field(default=200_000, ge=1_000)

    @model_validator(mode="after")
    def _fixed_needs_value(self):
        if self.method == "fixed" and self.d_s is None:
            raise ValueError("fixed separation needs d_s")
        return self


class SchedulerConfig(BaseModel):
    mode: ScheduleMode = "chorus"
    separation: SeparationConfig = Field(default_factory=SeparationConfig)


@dataclass
class SlotSchedule:
    """One scheduling round: each slot is the tuple of ids transmitting together."""

    slots: list[tuple[int, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    @property
    def target_ids(self) -> list[int]:
        return sorted(tid for slot in self.slots for tid in slot)

    def to_rows(self, round_index: int) -> list[tuple[int, int, str]]:
        return [
            (round_index, i, ";".join(str(t) for t in slot))
            for i, slot in enumerate(self.slots)
        ]


def resolve_separation(config: SchedulerConfig, intensity: float,
                       params: AcousticParams, seed: int = 0) -> float:
    """d_s for the configured method."""
    sep = config.separation
    if sep.method == "fixed":
        return sep.d_s
    if sep.method == "poisson_bound":
        return solve_separation_distance(intensity, sep.target_prob or 0.99)
    return solve_tdr_separation(intensity, params, sep.target_prob or 0.9,
                                sep.neighbors, sep.samples, seed)


def divide_closest_targets(positions: Mapping[int, Point2D] | Sequence[Point2D],
                           d_s: float, radii: Mapping[int, float] | None = None,
                           growth: float = 0.0) -> list[list[int]]:
    """Greedy split into groups whose members are pairwise at least d_s apart.

    While the closest pair of the working set is closer than d_s, the member
    that is more crowded (smaller distance to its second-nearest neighbor)
    moves to the next working set. Closest-pair ties go to the lowest ids;
    crowding ties evict the higher id.

    ``radii`` bounds how far each target may be from its position when its
    group transmits; group k transmits k slots later, so every radius grows
    by ``growth`` per group. Two members must then also be at least the sum
    of their radii apart, which keeps each target's true position out of the
    other's displacement disk. The pair that violates its threshold most is
    resolved first.
    """
    if d_s <= 0:
        raise ValueError(f"d_s must be positive, got {d_s}")
    if not isinstance(positions, Mapping):
        positions = dict(enumerate(positions))
    ids = sorted(positions)
    if not ids:
        return []
    pts = np.array([positions[i].as_array() for i in ids]).reshape(-1, 2)
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    base = np.array([0.0 if radii is None else radii.get(i, 0.0) for i in ids])

    groups: list[list[int]] = []
    remaining = list(range(len(ids)))
    while remaining:
        working = list(remaining)
        evicted: list[int] = []
        reach = base + growth * len(groups)
        while len(working) > 1:
            threshold = np.maximum(d_s, reach[working][:, None] + reach[working][None, :])
            sub = dist[np.ix_(working, working)] - threshold
            sub[np.tril_indices(len(working))] = np.inf
            flat = int(np.argmin(sub))
            i, j = divmod(flat, len(working))
            if sub[i, j] >= 0:
                break
            drop = _more_crowded(dist, working, i, j)
            evicted.append(working.pop(drop))
        groups.append([ids[k] for k in working])
        remaining = sorted(evicted)
    return groups


def _more_crowded(dist: np.ndarray, working: list[int], i: int, j: int) -> int:
    def second_nearest(pos: int) -> float:
        row = np.sort(np.delete(dist[working[pos], working], pos))
        return float(row[1]) if len(row) > 1 else np.inf

    ci, cj = second_nearest(i), second_nearest(j)
    if ci < cj:
        return i
    if cj < ci:
        return j
    return max(i, j)


def build_schedule(known: Mapping[int, Point2D], unknown_or_lost: Iterable[int],
                   d_s: float, mode: ScheduleMode = "chorus",
                   radii: Mapping[int, float] | None = None,
                   growth: float = 0.0) -> SlotSchedule:
    """Group slots for known targets, then one exclusive slot per unknown or lost target."""
    pending = sorted(set(unknown_or_lost) - set(known))
    if mode == "exclusive":
        return SlotSchedule([(tid,) for tid in sorted(set(known) | set(pending))])
    slots = []
    if known:
        slots = [tuple(g) for g in divide_closest_targets(known, d_s, radii, growth)]
    slots.extend((tid,) for tid in pending)
    return SlotSchedule(slots)
