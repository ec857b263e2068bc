"""Comparator with aftershock and the detectability predicates."""

from __future__ import annotations

import numpy as np
import pytest

from src.chorus.detection import (
    ArrivalEvent,
    cascade_distances,
    multi_detectable,
    pairwise_detectable,
    simulate_comparator,
)
from src.chorus.geometry import AcousticParams, Point2D, distance

ONE_MS = AcousticParams.from_aftershock(r=3.0, l_max=0.001)
PARAMS = AcousticParams(r=3.0, omega=0.33)


def times(detected):
    return [round(d.time * 1000, 9) for d in detected]


def test_single_arrival_detected():
    assert times(simulate_comparator([ArrivalEvent(0.004)], ONE_MS)) == [4.0]


def test_coincident_arrivals_yield_one_toa():
    arrivals = [ArrivalEvent(0.004, "a"), ArrivalEvent(0.004, "b")]
    assert times(simulate_comparator(arrivals, ONE_MS)) == [4.0]


def test_arrival_inside_aftershock_is_absorbed():
    arrivals = [ArrivalEvent(0.006), ArrivalEvent(0.004), ArrivalEvent(0.0055)]
    assert times(simulate_comparator(arrivals, ONE_MS)) == [4.0, 5.5]


def test_absorbed_arrival_does_not_extend_aftershock():
    arrivals = [ArrivalEvent(0.004), ArrivalEvent(0.0045), ArrivalEvent(0.0052)]
    assert times(simulate_comparator(arrivals, ONE_MS)) == [4.0, 5.2]


def test_empty_input():
    assert simulate_comparator([], ONE_MS) == []


def test_pairwise_examples():
    x = Point2D(1.0, 0.0)
    assert pairwise_detectable(Point2D(0.0, 0.0), Point2D(2.5, 0.0), x, PARAMS)
    assert not pairwise_detectable(Point2D(0.0, 0.0), Point2D(2.2, 0.0), x, PARAMS)
    assert not pairwise_detectable(Point2D(4.5, 0.0), Point2D(0.0, 0.0), x, PARAMS)


@pytest.mark.parametrize("dists, expected", [
    ([1.0, 1.4, 1.8], [True, True, True]),
    ([1.0, 1.2, 1.8], [True, False, True]),
    ([1.8, 1.0, 1.2], [True, True, False]),
    ([2.0], [True]),
])
def test_cascade(dists, expected):
    assert cascade_distances(dists, 0.33) == expected


def test_multi_detectable_aligned_with_input():
    x = Point2D(0.0, 0.0)
    targets = [Point2D(1.8, 0.0), Point2D(5.0, 0.0), Point2D(1.0, 0.0), Point2D(0.0, 1.2)]
    assert multi_detectable(targets, x, PARAMS) == [True, False, True, False]


def _scene(rng, max_targets=6):
    n = int(rng.integers(1, max_targets + 1))
    targets = [Point2D(*p) for p in rng.uniform(0.0, 5.0, size=(n, 2))]
    return targets, Point2D(*rng.uniform(0.0, 5.0, size=2))


def _comparator_flags(targets, x, params):
    arrivals = [
        ArrivalEvent(distance(t, x) / params.v_u, i)
        for i, t in enumerate(targets) if distance(t, x) <= params.r
    ]
    by_time = {}
    for event in sorted(arrivals, key=lambda e: e.time):
        by_time.setdefault(event.time, event.source_id)
    flags = [False] * len(targets)
    for toa in simulate_comparator(arrivals, params):
        flags[by_time[toa.time]] = True
    return flags


def _fuzz(scenes: int, seed: int):
    rng = np.random.default_rng(seed)
    disagreements = 0
    for _ in range(scenes):
        targets, x = _scene(rng)
        omega = float(rng.choice([0.33, 1.65, 3.3]))
        params = AcousticParams(r=3.0, omega=omega)
        if multi_detectable(targets, x, params) != _comparator_flags(targets, x, params):
            disagreements += 1
    return disagreements


def test_multi_detectable_agrees_with_comparator():
    assert _fuzz(10_000, seed=7) == 0


@pytest.mark.slow
def test_multi_detectable_agrees_with_comparator_full_fuzz():
    assert _fuzz(100_000, seed=8) == 0


def test_pairwise_matches_comparator_for_two_targets():
    rng = np.random.default_rng(11)
    for _ in range(5_000):
        a, b = Point2D(*rng.uniform(0, 5, 2)), Point2D(*rng.uniform(0, 5, 2))
        x = Point2D(*rng.uniform(0, 5, 2))
        both = all(_comparator_flags([a, b], x, PARAMS))
        assert pairwise_detectable(a, b, x, PARAMS) == both
        assert pairwise_detectable(b, a, x, PARAMS) == both


def test_detected_count_bounded_by_in_range_targets():
    rng = np.random.default_rng(13)
    for _ in range(2_000):
        targets, x = _scene(rng)
        in_range = sum(distance(t, x) <= PARAMS.r for t in targets)
        assert sum(multi_detectable(targets, x, PARAMS)) <= in_range
