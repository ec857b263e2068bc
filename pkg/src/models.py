"""Pydantic models for experiment configuration and reports."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field, field_validator

from src.chorus.locating import LocatorConfig
from src.chorus.scenario import ScenarioConfig
from src.chorus.scheduler import SchedulerConfig
from src.chorus.tracking import TrackerConfig


class SweepVariable(str, Enum):
    omega = "omega"
    noise = "noise"
    none = "none"


class RunConfig(BaseModel):
    slots: int = Field(default=600, ge=1)


class ExperimentConfig(BaseModel):
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    locator: LocatorConfig = Field(default_factory=LocatorConfig)
    tracker: TrackerConfig = Field(default_factory=TrackerConfig)
    scheduler: SchedulerConfig = Field(default_factory=SchedulerConfig)
    run: RunConfig = Field(default_factory=RunConfig)


class ExperimentPreset(BaseModel):
    name: str
    description: str = ""
    overrides: dict = Field(default_factory=dict)
    sweep: SweepVariable = SweepVariable.none
    values: list[float] = Field(default_factory=list)

    @field_validator("values")
    @classmethod
    def _positive(cls, values: list[float]) -> list[float]:
        if any(v <= 0 for v in values):
            raise ValueError("sweep values must be positive")
        return values


class MetricsReport(BaseModel):
    p50: float = Field(ge=0)
    p90: float = Field(ge=0)
    p99: float = Field(ge=0)
    located: int = Field(ge=0)
    efficiency: float
    predicted_fraction: float = Field(ge=0, le=1)
    loss_rate: float = Field(ge=0)
    losses: int = Field(ge=0)
    mean_update_interval: float | None = None
    slots: int = Field(ge=0)
    d_s: float | None = None


class SweepRow(BaseModel):
    variable: SweepVariable
    value: float
    seed: int
    report: MetricsReport
