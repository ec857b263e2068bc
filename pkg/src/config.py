"""Configuration loading and validation."""

import copy
import sys
from pathlib import Path

import yaml
from pydantic import ValidationError
from rich.console import Console

from src.models import ExperimentConfig, ExperimentPreset

DEFAULT_CONFIG = "configs/default.yaml"
DEFAULT_PRESETS = "configs/presets.yaml"

err_console = Console(stderr=True)


class ConfigError(ValueError):
    """Config file or preset failed validation."""


def load_config(config_path: str = DEFAULT_CONFIG) -> dict:
    """Load a YAML (or JSON) configuration file."""
    path = Path(config_path)
    if not path.exists():
        err_console.print(f"[bold red][ERROR][/bold red] Config file not found: {config_path}")
        sys.exit(1)
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def merge_config(base: dict, overrides: dict) -> dict:
    """Recursively overlay ``overrides`` on a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_cli_overrides(config: dict, **kwargs) -> dict:
    """Apply CLI argument overrides to config."""
    scenario = config.setdefault("scenario", {})
    if kwargs.get("seed") is not None:
        scenario["seed"] = kwargs["seed"]
    if kwargs.get("targets") is not None:
        scenario["n_targets"] = kwargs["targets"]
    if kwargs.get("noise") is not None:
        scenario["noise_max_offset"] = kwargs["noise"]
    if kwargs.get("omega") is not None:
        config.setdefault("acoustic", {})["omega"] = kwargs["omega"]
    if kwargs.get("slots") is not None:
        config.setdefault("run", {})["slots"] = kwargs["slots"]
    return config


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a config dict; the top-level ``acoustic`` section feeds the scenario."""
    data = copy.deepcopy(raw or {})
    acoustic = data.pop("acoustic", None)
    if acoustic is not None:
        scenario = data.setdefault("scenario", {})
        scenario["acoustic"] = merge_config(scenario.get("acoustic", {}), acoustic)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def load_presets(presets_path: str = DEFAULT_PRESETS) -> dict[str, ExperimentPreset]:
    path = Path(presets_path)
    if not path.exists():
        raise ConfigError(f"presets file not found: {presets_path}")
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    presets = {}
    for name, body in raw.items():
        try:
            presets[name] = ExperimentPreset.model_validate({"name": name, **(body or {})})
        except ValidationError as exc:
            raise ConfigError(f"preset '{name}': {_describe(exc)}") from exc
    return presets


def load_preset(name: str, presets_path: str = DEFAULT_PRESETS) -> ExperimentPreset:
    presets = load_presets(presets_path)
    if name not in presets:
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(sorted(presets))})")
    return presets[name]


def resolve_config(config_path: str = DEFAULT_CONFIG, preset: ExperimentPreset | None = None,
                   **overrides) -> dict:
    """Base file, then preset overrides, then CLI flags."""
    config = load_config(config_path)
    if preset is not None:
        config = merge_config(config, preset.overrides)
    return apply_cli_overrides(config, **overrides)


def ensure_workdir(workdir: str) -> Path:
    """Create workdir if needed."""
    path = Path(workdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _describe(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
        for err in exc.errors()
    )
