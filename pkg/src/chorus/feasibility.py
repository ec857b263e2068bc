"""TOA-detectable-region bounds and the confident separation distance d_s."""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, Field

from src.chorus.geometry import AcousticParams, blind_mask, blind_region_area, sample_disk

RESOLUTION = 1e-3
UNION_SAMPLES = 200_000


class UnsatisfiableError(ValueError):
    """No separation distance reaches the requested probability."""


class UnsupportedConfigurationError(ValueError):
    """Neighbor count outside the supported symmetric layouts."""


class DeploymentModel(BaseModel):
    """Poisson receiver field with intensity λ (receivers per m²) and target separation d."""

    intensity: float = Field(gt=0)
    d: float = Field(gt=0)


def at_least_three(mu: float) -> float:
    """P(N ≥ 3) for N ~ Poisson(mu)."""
    return 1.0 - math.exp(-mu) * (1.0 + mu + mu * mu / 2.0)


def tdr_lower_bound_area(d: float) -> float:
    return math.pi * (d / 2.0) ** 2


def prob_three_receivers_lb(model: DeploymentModel) -> float:
    mu = model.intensity * math.pi * model.d ** 2 / 2.0
    return at_least_three(mu)


def solve_separation_distance(intensity: float, target_prob: float = 0.99) -> float:
    """Smallest d on a 1 mm grid whose Poisson lower bound reaches target_prob."""
    if not intensity > 0.0:
        raise UnsatisfiableError(f"receiver intensity must be positive, got {intensity}")
    if target_prob >= 1.0:
        raise UnsatisfiableError(f"target probability {target_prob} cannot be reached")
    if target_prob <= 0.0:
        return RESOLUTION
    # Solve for the Poisson mean first so the result is monotone in λ.
    mu = _bisect_smallest(at_least_three, target_prob, lo=0.0, hi=None, tol=1e-12)
    d = math.sqrt(2.0 * mu / (math.pi * intensity))
    return RESOLUTION * math.ceil(d / RESOLUTION)


def neighbor_positions(k: int, d: float) -> np.ndarray:
    """k−1 concurrent neighbors on a hexagonal ring of radius d around the origin."""
    if not 2 <= k <= 7:
        raise UnsupportedConfigurationError(f"k must be in 2..7, got {k}")
    angles = np.deg2rad(60.0 * np.arange(k - 1))
    return d * np.column_stack((np.cos(angles), np.sin(angles)))


def union_blind_mask(points: np.ndarray, center: np.ndarray, neighbors: np.ndarray,
                     params: AcousticParams) -> np.ndarray:
    mask = np.zeros(len(points), dtype=bool)
    for b in neighbors:
        mask |= blind_mask(points, center, center + b, params)
    return mask


def symmetric_union_blind_area(k: int, d: float, params: AcousticParams,
                               samples: int = UNION_SAMPLES, seed: int = 0) -> float:
    """Monte Carlo area of the union of blind regions caused by k−1 symmetric neighbors."""
    neighbors = neighbor_positions(k, d)
    rng = np.random.default_rng(seed)
    origin = np.zeros(2)
    pts = sample_disk(rng, origin, params.r, samples)
    hits = np.count_nonzero(union_blind_mask(pts, origin, neighbors, params))
    return math.pi * params.r ** 2 * hits / samples


def tdr_area(k: int, d: float, params: AcousticParams,
             samples: int = UNION_SAMPLES, seed: int = 0) -> float:
    """Audible disk minus the symmetric blind union (k = 2 uses the closed form)."""
    if k == 2:
        return math.pi * params.r ** 2 - blind_region_area(d, params)
    return math.pi * params.r ** 2 - symmetric_union_blind_area(k, d, params, samples, seed)


def solve_tdr_separation(intensity: float, params: AcousticParams, target_prob: float = 0.9,
                         neighbors: int = 1, samples: int = UNION_SAMPLES,
                         seed: int = 0) -> float:
    """Smallest d whose true TDR holds ≥3 Poisson receivers with target_prob.

    The TDR is taken against ``neighbors`` concurrent targets at distance d,
    so the answer grows with ω.
    """
    audible = math.pi * params.r ** 2
    ceiling = at_least_three(intensity * audible)
    if target_prob >= ceiling:
        raise UnsatisfiableError(
            f"target probability {target_prob} exceeds {ceiling:.4f}, "
            f"the value for an unobstructed audible disk"
        )
    if target_prob <= 0.0:
        return RESOLUTION

    def prob(d: float) -> float:
        return at_least_three(intensity * tdr_area(neighbors + 1, d, params, samples, seed))

    d = _bisect_smallest(prob, target_prob, lo=0.0, hi=2.0 * params.r, tol=1e-6)
    return RESOLUTION * math.ceil(d / RESOLUTION)


def empirical_tdr_coverage(model: DeploymentModel, params: AcousticParams,
                           neighbors: int = 1, draws: int = 100_000,
                           seed: int = 0) -> tuple[float, float]:
    """Sample Poisson receiver fields and count receivers in the true TDR.

    Returns the empirical P(≥3 receivers) and its binomial standard error.
    """
    rng = np.random.default_rng(seed)
    offsets = neighbor_positions(neighbors + 1, model.d)
    origin = np.zeros(2)
    counts = rng.poisson(model.intensity * math.pi * params.r ** 2, size=draws)
    pts = sample_disk(rng, origin, params.r, int(counts.sum()))
    visible = ~union_blind_mask(pts, origin, offsets, params)
    owner = np.repeat(np.arange(draws), counts)
    per_draw = np.bincount(owner[visible], minlength=draws)
    p_hat = float(np.mean(per_draw >= 3))
    return p_hat, math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / draws)


def _bisect_smallest(prob, target: float, lo: float, hi: float | None, tol: float) -> float:
    """Smallest x with prob(x) ≥ target for a non-decreasing prob; returns the upper bracket."""
    if hi is None:
        hi = 1.0
        while prob(hi) < target:
            lo, hi = hi, hi * 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if prob(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi
