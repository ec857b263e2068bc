"""Analyze step: blind-region and feasibility tables for the configured acoustics."""

from __future__ import annotations

import math

import numpy as np

from src.chorus.feasibility import (
    DeploymentModel,
    UnsatisfiableError,
    prob_three_receivers_lb,
    solve_separation_distance,
    solve_tdr_separation,
    symmetric_union_blind_area,
)
from src.chorus.geometry import Point2D, blind_region_area, monte_carlo_blind_area
from src.pipeline.base import PipelineStep, console
from src.utils.io import write_csv

SEPARATIONS = np.round(np.arange(0.0, 6.01, 0.25), 2)
UNION_DISTANCES = (0.5, 1.0, 2.0, 3.0)
INTENSITIES = (0.1, 0.25, 0.5, 1.0, 2.0)
COVERAGE_DISTANCES = np.round(np.arange(0.5, 4.01, 0.5), 2)


class AnalyzeStep(PipelineStep):
    name = "analyze"
    output_files = ["blind_region.csv", "union_blind.csv", "coverage_prob.csv", "separation.csv"]

    def execute(self, monte_carlo_samples: int = 0, union_samples: int = 200_000, **kwargs):
        params = self.config.scenario.acoustic
        seed = self.config.scenario.seed
        r = params.r

        rows = []
        for d in SEPARATIONS:
            d = float(d)
            if d > 2.0 * r:
                break
            mc = ""
            if monte_carlo_samples > 0:
                mc = monte_carlo_blind_area(Point2D(0.0, 0.0), Point2D(d, 0.0), params,
                                            monte_carlo_samples, seed)
            rows.append((d, blind_region_area(d, params), mc))
        write_csv(self.workdir / "blind_region.csv", ("d_ab", "area", "monte_carlo"), rows)

        audible = math.pi * r ** 2
        rows = []
        for d in UNION_DISTANCES:
            for k in range(2, 8):
                area = symmetric_union_blind_area(k, d, params, union_samples, seed)
                rows.append((k, d, area, area / audible))
        write_csv(self.workdir / "union_blind.csv", ("k", "d", "area", "fraction"), rows)

        rows = [
            (lam, float(d), prob_three_receivers_lb(DeploymentModel(intensity=lam, d=float(d))))
            for lam in INTENSITIES for d in COVERAGE_DISTANCES
        ]
        write_csv(self.workdir / "coverage_prob.csv", ("intensity", "d", "prob_lb"), rows)

        sep = self.config.scheduler.separation
        rows = []
        for lam in INTENSITIES:
            try:
                tdr = solve_tdr_separation(lam, params, sep.target_prob or 0.9, sep.neighbors,
                                           union_samples, seed)
            except UnsatisfiableError:
                tdr = ""
            rows.append((lam, solve_separation_distance(lam), tdr))
        write_csv(self.workdir / "separation.csv", ("intensity", "poisson_bound", "tdr"), rows)
        console.print(f"    Tables written for r={r} m, omega={params.omega} m")
