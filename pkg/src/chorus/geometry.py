"""Planar geometry and the blind region of one target caused by a concurrent one.

Frame used for the closed form: origin at the midpoint of a–b, x-axis along
a→b. The blind region of a is the part of a's audible disk lying between the
perpendicular bisector (d_ax = d_bx) and the hyperbola branch d_ax − d_bx = ω
around b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import integrate

QUAD_TOLERANCE = 1e-9
MC_CHUNK = 1_000_000


class InvalidGeometryError(ValueError):
    """Negative or non-finite geometric input."""


@dataclass(frozen=True, slots=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def from_array(cls, values) -> Point2D:
        return cls(float(values[0]), float(values[1]))


class AcousticParams(BaseModel):
    """Audible range r, confident separation distance ω and ultrasound speed.

    ω = L_max · v_u, so the worst-case aftershock duration is derived.
    """

    r: float = Field(default=3.0, gt=0)
    omega: float = Field(default=0.33, ge=0)
    v_u: float = Field(default=330.0, gt=0)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _finite(self):
        for name in ("r", "omega", "v_u"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self

    @property
    def l_max(self) -> float:
        return self.omega / self.v_u

    @classmethod
    def from_aftershock(cls, r: float, l_max: float, v_u: float = 330.0) -> AcousticParams:
        """Build params from an aftershock duration in seconds (1 ms -> 0.33 m)."""
        return cls(r=r, omega=l_max * v_u, v_u=v_u)


@dataclass(frozen=True, slots=True)
class BlindRegionParams:
    theta: float
    a_h: float
    b_h: float
    c_h: float
    y_beta: float
    s_e: float


def distance(a: Point2D, b: Point2D) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _segment_area(d_ab: float, r: float) -> tuple[float, float]:
    """Area of a's audible disk beyond the bisector, and the half-angle θ."""
    theta = math.acos(min(1.0, d_ab / (2.0 * r)))
    return r * r * (theta - math.sin(theta) * math.cos(theta)), theta


def blind_region_params(d_ab: float, params: AcousticParams) -> BlindRegionParams:
    """Expand the quantities behind the closed form for one separation d_ab.

    s_e is the part of the audible disk inside the hyperbola branch around b
    (d_ax − d_bx > ω); it is non-zero only for ω < d_ab < 2r − ω.
    """
    _check_separation(d_ab)
    r, omega = params.r, params.omega
    a_h = omega / 2.0
    b_h = d_ab / 2.0
    c_h = math.hypot(a_h, b_h)
    theta = math.acos(min(1.0, d_ab / (2.0 * r)))

    if not (omega < d_ab < 2.0 * r - omega):
        return BlindRegionParams(theta, a_h, b_h, c_h, 0.0, 0.0)

    # Semi-minor axis of the hyperbola with foci at ±b_h and vertex at a_h.
    semi_minor = math.sqrt(b_h * b_h - a_h * a_h)
    # Intersection with the circle: d_ax = r and d_bx = r − ω.
    x_beta = a_h * (r - a_h) / b_h
    y_beta = math.sqrt(max(0.0, r * r - (x_beta + b_h) ** 2))

    def width(y: float) -> float:
        circle = -b_h + math.sqrt(max(0.0, r * r - y * y))
        hyperbola = a_h * math.sqrt(1.0 + (y / semi_minor) ** 2)
        return max(0.0, circle - hyperbola)

    half, _ = integrate.quad(width, 0.0, y_beta, epsabs=QUAD_TOLERANCE, limit=200)
    return BlindRegionParams(theta, a_h, b_h, c_h, y_beta, 2.0 * half)


def blind_region_area(d_ab: float, params: AcousticParams) -> float:
    """Closed-form area of the blind region of a caused by b at distance d_ab.

    Piecewise in d_ab: zero beyond 2r, the full circular segment beyond the
    bisector when d_ab ≥ 2r − ω or d_ab ≤ ω, and the segment minus the
    hyperbola cap s_e in between. d_ab = 0 returns the limit πr²/2.
    """
    _check_separation(d_ab)
    r, omega = params.r, params.omega
    if d_ab > 2.0 * r:
        return 0.0
    segment, _ = _segment_area(d_ab, r)
    if d_ab >= 2.0 * r - omega or d_ab <= omega:
        return segment
    return max(0.0, segment - blind_region_params(d_ab, params).s_e)


def blind_region_contains(receiver: Point2D, a: Point2D, b: Point2D,
                          params: AcousticParams) -> bool:
    d_ax = distance(a, receiver)
    d_bx = distance(b, receiver)
    return 0.0 < d_ax - d_bx <= params.omega and d_ax <= params.r


def blind_mask(points: np.ndarray, a: np.ndarray, b: np.ndarray,
               params: AcousticParams) -> np.ndarray:
    """Vectorised blind_region_contains over an (N, 2) array of receivers."""
    d_ax = np.linalg.norm(points - a, axis=1)
    d_bx = np.linalg.norm(points - b, axis=1)
    diff = d_ax - d_bx
    return (diff > 0.0) & (diff <= params.omega) & (d_ax <= params.r)


def sample_disk(rng: np.random.Generator, center: np.ndarray, radius: float,
                count: int) -> np.ndarray:
    """Uniform samples over a disk."""
    rho = radius * np.sqrt(rng.random(count))
    phi = 2.0 * np.pi * rng.random(count)
    return center + np.column_stack((rho * np.cos(phi), rho * np.sin(phi)))


def monte_carlo_blind_area(a: Point2D, b: Point2D, params: AcousticParams,
                           samples: int, seed: int) -> float:
    """Rejection-sampling estimate of the blind region area of a caused by b."""
    if samples <= 0:
        raise InvalidGeometryError("samples must be positive")
    rng = np.random.default_rng(seed)
    a_arr, b_arr = a.as_array(), b.as_array()
    hits = 0
    remaining = samples
    while remaining > 0:
        n = min(MC_CHUNK, remaining)
        pts = sample_disk(rng, a_arr, params.r, n)
        hits += int(np.count_nonzero(blind_mask(pts, a_arr, b_arr, params)))
        remaining -= n
    return math.pi * params.r ** 2 * hits / samples


def _check_separation(d_ab: float):
    if not math.isfinite(d_ab):
        raise InvalidGeometryError(f"non-finite separation {d_ab}")
    if d_ab < 0:
        raise InvalidGeometryError(f"negative separation {d_ab}")
