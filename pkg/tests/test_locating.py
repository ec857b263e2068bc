"""Distance labeling, trilateration, residue ranking and candidate generation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.chorus.geometry import Point2D, distance
from src.chorus.locating import (
    DegenerateGeometryError,
    LabeledDistance,
    LocatorConfig,
    generate_candidates,
    label_distances,
    locate_slot,
    self_consistency,
    trilaterate,
)
from src.chorus.scenario import AnonymousDistanceSet, ScenarioConfig

GRID = [Point2D(float(x), float(y)) for y in range(0, 11, 2) for x in range(0, 11, 2)]
CONFIG = LocatorConfig(v_e=0.1).resolved(ScenarioConfig())


def exact_sets(targets, receivers, r=3.0):
    sets = []
    for rid, receiver in enumerate(receivers):
        dists = tuple(distance(t, receiver) for t in targets if distance(t, receiver) <= r)
        sets.append(AnonymousDistanceSet(rid, 0, dists))
    return sets


def test_resolved_defaults():
    config = LocatorConfig().resolved(ScenarioConfig(noise_max_offset=0.05))
    assert config.v_e == pytest.approx(0.14)
    assert config.support_gate == pytest.approx(0.11)
    assert config.slack == pytest.approx(0.1)
    assert config.max_residue == pytest.approx(0.05 ** 2 + 1e-4)


def test_resolved_static_scene_keeps_labeling_window():
    config = LocatorConfig().resolved(ScenarioConfig(speed_mean=0.0, speed_std=0.0))
    assert config.v_e > 0.0


def test_label_stationary_target():
    target = Point2D(3.0, 3.0)
    labeled = label_distances(exact_sets([target], GRID), {0: target}, GRID, CONFIG)
    assert labeled and all(ld.candidate_sources == {0} for ld in labeled)


def test_label_far_distance_is_orphan():
    target = Point2D(3.0, 3.0)
    d = distance(target, GRID[0]) + 0.2
    labeled = label_distances([AnonymousDistanceSet(0, 0, (d,))], {0: target}, GRID, CONFIG)
    assert labeled[0].candidate_sources == frozenset()


def test_label_shared_by_two_targets():
    a, b = Point2D(1.0, 0.0), Point2D(0.0, 1.03)
    labeled = label_distances([AnonymousDistanceSet(0, 0, (1.0,))], {0: a, 1: b}, GRID, CONFIG)
    assert labeled[0].candidate_sources == {0, 1}


def test_label_without_history_takes_everything():
    labeled = label_distances(exact_sets([Point2D(3, 3)], GRID), {5: None}, GRID, CONFIG)
    assert all(ld.candidate_sources == {5} for ld in labeled)


def test_label_bound_grows_with_elapsed_slots():
    target = Point2D(3.0, 3.0)
    d = distance(target, GRID[0]) + 0.25
    sets = [AnonymousDistanceSet(0, 0, (d,))]
    assert label_distances(sets, {0: target}, GRID, CONFIG, {0: 1})[0].candidate_sources == set()
    assert label_distances(sets, {0: target}, GRID, CONFIG, {0: 3})[0].candidate_sources == {0}


def test_trilaterate_exact_construction():
    supports = [(Point2D(0, 0), math.sqrt(2)), (Point2D(4, 0), math.sqrt(10)),
                (Point2D(0, 4), math.sqrt(10))]
    x = trilaterate(supports)
    assert x.x == pytest.approx(1.0, abs=1e-9)
    assert x.y == pytest.approx(1.0, abs=1e-9)


def test_trilaterate_recovers_random_points():
    rng = np.random.default_rng(0)
    anchors = [Point2D(0, 0), Point2D(6, 0), Point2D(0, 6), Point2D(6, 6)]
    for _ in range(200):
        truth = Point2D(*rng.uniform(0.5, 5.5, 2))
        x = trilaterate([(p, distance(truth, p)) for p in anchors])
        assert distance(x, truth) < 1e-6


def test_trilaterate_rejects_collinear_and_short_supports():
    with pytest.raises(DegenerateGeometryError):
        trilaterate([(Point2D(0, 0), 1.0), (Point2D(1, 0), 1.0), (Point2D(2, 0), 1.0)])
    with pytest.raises(DegenerateGeometryError):
        trilaterate([(Point2D(0, 0), 1.0), (Point2D(1, 0), 1.0)])


def test_trilaterate_inflated_distances_beat_truth_residue():
    anchors = [Point2D(0, 0), Point2D(4, 0), Point2D(0, 4), Point2D(4, 4)]
    truth = Point2D(1.3, 2.1)
    supports = [(p, distance(truth, p) + 0.05) for p in anchors]
    x = trilaterate(supports, iterations=5)
    assert self_consistency(x, supports) <= self_consistency(truth, supports) + 1e-12
    xs, ys = np.meshgrid(np.arange(0.8, 1.8, 0.01), np.arange(1.6, 2.6, 0.01))
    grid_best = min(self_consistency(Point2D(px, py), supports)
                    for px, py in zip(xs.ravel(), ys.ravel()))
    assert self_consistency(x, supports) <= grid_best + 1e-9


def test_self_consistency_values():
    anchors = [Point2D(0, 0), Point2D(4, 0), Point2D(0, 4), Point2D(4, 4)]
    truth = Point2D(1.0, 1.0)
    exact = [(p, distance(truth, p)) for p in anchors]
    assert self_consistency(truth, exact) == pytest.approx(0.0)
    off = [(exact[0][0], exact[0][1] + 0.1)] + exact[1:]
    assert self_consistency(truth, off) == pytest.approx(0.01 / 4)


def test_noiseless_single_target_candidate_is_truth():
    receivers = [Point2D(0, 0), Point2D(4, 0), Point2D(0, 4), Point2D(4, 4)]
    truth = Point2D(1.5, 2.5)
    labeled = label_distances(exact_sets([truth], receivers, r=10.0), {0: None}, receivers, CONFIG)
    candidates = generate_candidates(labeled, 0, receivers, CONFIG)
    assert distance(candidates[0].position, truth) < 1e-9
    assert candidates[0].residue == pytest.approx(0.0, abs=1e-18)
    assert len(candidates[0].support) == 4


def test_fewer_than_three_receivers_yields_nothing():
    labeled = [LabeledDistance(0, 1.0, frozenset({0})), LabeledDistance(1, 1.0, frozenset({0})),
               LabeledDistance(1, 1.5, frozenset({0}))]
    assert generate_candidates(labeled, 0, GRID, CONFIG) == []


def test_candidates_sorted_capped_and_bounded():
    rng = np.random.default_rng(3)
    config = LocatorConfig(v_e=0.3, n_candidates=3, max_residue=10.0).resolved(ScenarioConfig())
    for _ in range(30):
        a = Point2D(*rng.uniform(2, 8, 2))
        b = Point2D(a.x + rng.uniform(-1, 1), a.y + rng.uniform(-1, 1))
        prev = {0: Point2D(a.x + 0.05, a.y), 1: Point2D(b.x, b.y - 0.05)}
        sets = exact_sets([a, b], GRID)
        labeled = label_distances(sets, prev, GRID, config)
        candidates = generate_candidates(labeled, 0, GRID, config, prev[0], 1, (10.0, 10.0))
        assert len(candidates) <= 3
        residues = [c.residue for c in candidates]
        assert residues == sorted(residues)
        assert all(distance(c.position, prev[0]) <= 0.3 + 1e-12 for c in candidates)
        assert all(len(c.support) >= 3 for c in candidates)


def test_cross_labeled_combination_has_larger_residue():
    a, b = Point2D(4.0, 4.0), Point2D(4.6, 4.1)
    config = LocatorConfig(v_e=0.5, max_residue=10.0).resolved(ScenarioConfig())
    sets = exact_sets([a, b], GRID)
    labeled = label_distances(sets, {0: a, 1: b}, GRID, config)
    candidates = generate_candidates(labeled, 0, GRID, config, a, 1, (10.0, 10.0))
    assert distance(candidates[0].position, a) < 1e-6
    assert all(c.residue > candidates[0].residue for c in candidates[1:])


def test_noiseless_top_candidate_random_scenes():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        truth = Point2D(*rng.uniform(0, 10, 2))
        sets = exact_sets([truth], GRID)
        result = locate_slot(sets, [0], {0: None}, GRID, CONFIG, {}, (10.0, 10.0))
        assert distance(result[0][0].position, truth) < 1e-6


def test_mixed_supports_are_not_candidates():
    a, b = Point2D(4.0, 4.0), Point2D(4.6, 4.1)
    config = LocatorConfig(v_e=0.5).resolved(ScenarioConfig())
    labeled = label_distances(exact_sets([a, b], GRID), {0: a, 1: b}, GRID, config)
    candidates = generate_candidates(labeled, 0, GRID, config, a, 1, (10.0, 10.0))
    assert distance(candidates[0].position, a) < 1e-6
    assert all(c.residue <= 1e-4 for c in candidates)


def test_noise_slack_widens_label_gate():
    config = LocatorConfig(v_e=0.1).resolved(ScenarioConfig(noise_max_offset=0.05))
    target = Point2D(3.0, 3.0)
    near = distance(target, GRID[0]) + 0.18
    far = distance(target, GRID[0]) + 0.25
    labeled = label_distances([AnonymousDistanceSet(0, 0, (near, far))], {0: target}, GRID,
                              config)
    assert [ld.candidate_sources for ld in labeled] == [{0}, set()]


def test_support_skips_neighbor_distance_at_masked_receiver():
    receivers = [Point2D(0, 0), Point2D(4, 0), Point2D(0, 4), Point2D(4, 4)]
    truth = Point2D(1.5, 2.5)
    # receiver 3 only heard a neighbor 5 cm closer than the target
    heard = [distance(truth, p) for p in receivers[:3]] + [distance(truth, receivers[3]) - 0.05]
    labeled = [LabeledDistance(rid, d, frozenset({0})) for rid, d in enumerate(heard)]
    candidates = generate_candidates(labeled, 0, receivers, CONFIG, truth, 1)
    assert distance(candidates[0].position, truth) < 1e-9
    assert candidates[0].residue == pytest.approx(0.0, abs=1e-18)
    assert (3, heard[3]) not in candidates[0].support


def test_implausible_residue_leaves_no_candidate():
    receivers = [Point2D(0, 0), Point2D(4, 0), Point2D(0, 4)]
    truth = Point2D(1.0, 1.5)
    heard = [distance(truth, receivers[0]) + 0.3] + [distance(truth, p) for p in receivers[1:]]
    labeled = [LabeledDistance(rid, d, frozenset({0})) for rid, d in enumerate(heard)]
    generous = LocatorConfig(v_e=1.0, max_residue=1.0).resolved(ScenarioConfig())
    assert generate_candidates(labeled, 0, receivers, generous)
    assert generate_candidates(labeled, 0, receivers, CONFIG) == []