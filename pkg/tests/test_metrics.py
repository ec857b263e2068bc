"""Error CDF, scheduling efficiency and the summary report."""

from __future__ import annotations

import numpy as np
import pytest

from src.chorus.geometry import Point2D
from src.pipeline.metrics import (
    AlignmentError,
    EstimateRow,
    compute_efficiency,
    compute_error_cdf,
    compute_errors,
    mean_update_interval,
    summarize,
)


def offset_rows(offsets):
    truth = {(slot, 0): Point2D(1.0, 1.0) for slot in range(len(offsets))}
    estimates = [EstimateRow(slot, 0, 1.0 + off, 1.0) for slot, off in enumerate(offsets)]
    return estimates, truth


def test_perfect_estimates_give_step_at_zero():
    estimates, truth = offset_rows([0.0] * 5)
    cdf = compute_error_cdf(estimates, truth)
    assert np.all(cdf.errors == 0.0)
    assert cdf.probabilities()[-1] == 1.0
    assert cdf.quantile(0.5) == 0.0


def test_median_of_known_errors():
    estimates, truth = offset_rows([0.04, 0.01, 0.03, 0.02])
    cdf = compute_error_cdf(estimates, truth)
    assert cdf.quantile(0.5) == pytest.approx(0.025)
    assert list(cdf.probabilities()) == [0.25, 0.5, 0.75, 1.0]


def test_cdf_invariant_under_row_order():
    estimates, truth = offset_rows([0.3, 0.1, 0.2, 0.05, 0.4])
    forward = compute_error_cdf(estimates, truth)
    backward = compute_error_cdf(list(reversed(estimates)), truth)
    assert np.array_equal(forward.errors, backward.errors)


def test_predicted_rows_are_not_scored():
    estimates, truth = offset_rows([0.1])
    estimates.append(EstimateRow(0, 0, 9.0, 9.0, "predicted"))
    assert [e for _, _, e in compute_errors(estimates, truth)] == [pytest.approx(0.1)]


def test_missing_truth_raises():
    estimates, truth = offset_rows([0.1])
    estimates.append(EstimateRow(4, 0, 1.0, 1.0))
    with pytest.raises(AlignmentError):
        compute_errors(estimates, truth)


def test_empty_estimates_give_empty_cdf():
    cdf = compute_error_cdf([], {})
    assert len(cdf.errors) == 0
    assert cdf.quantile(0.9) == 0.0


@pytest.mark.parametrize("log, expected", [
    ([tuple(range(10))], 10.0),
    ([(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)], 2.0),
    ([(0, 1, 2), (3, 4, 5), (6, 7, 8)], 3.0),
    ([(i,) for i in range(10)], 1.0),
])
def test_efficiency(log, expected):
    assert compute_efficiency(log) == pytest.approx(expected)


def test_efficiency_of_empty_log_raises():
    with pytest.raises(ValueError):
        compute_efficiency([])


def test_mean_update_interval():
    estimates = [EstimateRow(0, 0, 0, 0), EstimateRow(2, 0, 0, 0), EstimateRow(6, 0, 0, 0),
                 EstimateRow(1, 1, 0, 0), EstimateRow(3, 1, 0, 0, "predicted")]
    assert mean_update_interval(estimates) == pytest.approx(3.0)
    assert mean_update_interval(estimates[3:]) is None


def test_summary_report():
    estimates, truth = offset_rows([0.01, 0.02, 0.03, 0.04])
    estimates.append(EstimateRow(3, 0, 5.0, 5.0, "predicted"))
    log = [(0,), (0,), (0,), (0,)]
    report = summarize(estimates, truth, log, losses=1, d_s=1.5)
    assert report.p50 == pytest.approx(0.025)
    assert report.located == 4
    assert report.efficiency == 1.0
    assert report.predicted_fraction == pytest.approx(0.2)
    assert report.loss_rate == pytest.approx(0.25)
    assert report.mean_update_interval == pytest.approx(1.0)
    assert report.slots == 4
    assert report.d_s == 1.5
