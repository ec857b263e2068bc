from src.pipeline.simulate import SimulateStep
from src.pipeline.metrics import MetricsStep
from src.pipeline.analyze import AnalyzeStep
from src.pipeline.replay import ReplayStep

__all__ = [
    "SimulateStep",
    "MetricsStep",
    "AnalyzeStep",
    "ReplayStep",
]
