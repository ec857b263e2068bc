"""Threshold comparator with aftershock, and the detectability predicates.

A detected wavefront holds the comparator high for L_max; any wavefront
arriving while it is high is absorbed. Absorbed arrivals do not extend the
high state. An arrival exactly L_max after the last detected one is still
absorbed, which keeps the comparator consistent with the strict ω test of
the pairwise condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable

from src.chorus.geometry import AcousticParams, Point2D, distance


@dataclass(frozen=True, slots=True)
class ArrivalEvent:
    time: float
    source_id: Hashable = None


@dataclass(frozen=True, slots=True)
class DetectedToa:
    time: float


def simulate_comparator(arrivals: Iterable[ArrivalEvent],
                        params: AcousticParams) -> list[DetectedToa]:
    detected: list[DetectedToa] = []
    last = None
    for event in sorted(arrivals, key=lambda e: e.time):
        if last is None or event.time - last > params.l_max:
            detected.append(DetectedToa(event.time))
            last = event.time
    return detected


def pairwise_detectable(a: Point2D, b: Point2D, x: Point2D,
                        params: AcousticParams) -> bool:
    d_ax = distance(a, x)
    d_bx = distance(b, x)
    return abs(d_ax - d_bx) > params.omega and d_ax <= params.r and d_bx <= params.r


def cascade_distances(distances: Iterable[float], omega: float) -> list[bool]:
    """Detection flags for distances at one receiver, in the given order."""
    dists = list(distances)
    order = sorted(range(len(dists)), key=lambda i: dists[i])
    flags = [False] * len(dists)
    last = None
    for i in order:
        if last is None or dists[i] - last > omega:
            flags[i] = True
            last = dists[i]
    return flags


def multi_detectable(targets: list[Point2D], x: Point2D,
                     params: AcousticParams) -> list[bool]:
    """Whether each target's TOA survives at receiver x.

    The result is aligned with ``targets``; targets beyond r are False.
    """
    dists = [distance(t, x) for t in targets]
    in_range = [i for i, d in enumerate(dists) if d <= params.r]
    flags = cascade_distances([dists[i] for i in in_range], params.omega)
    result = [False] * len(targets)
    for i, ok in zip(in_range, flags):
        result[i] = ok
    return result
