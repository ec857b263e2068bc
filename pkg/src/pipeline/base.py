"""Base class for experiment steps: skip when up to date, clean up on failure."""

import abc
from pathlib import Path
from typing import Any, Callable

from rich.console import Console

from src.models import ExperimentConfig
from src.utils.io import read_json, write_json

console = Console()

# callback(event) with event["type"] in "step_start", "step_progress",
# "step_complete", "step_skipped", "error".
ProgressCallback = Callable[[dict[str, Any]], None]


def set_quiet(quiet: bool):
    console.quiet = quiet


class PipelineStep(abc.ABC):
    """One stage of an experiment writing files into a workdir.

    A step counts as done when its expected outputs exist and its stamp file
    records the same experiment config and step options; a rerun with a
    different seed, scenario or input in the same workdir recomputes instead
    of reusing stale CSVs.
    """

    name: str = "base"
    output_files: list[str] = []
    # Written only in some runs; removed with the others on failure.
    optional_files: list[str] = []

    def __init__(self, workdir: Path, config: ExperimentConfig, force: bool = False):
        self.workdir = workdir
        self.config = config
        self.force = force

    @property
    def stamp_path(self) -> Path:
        return self.workdir / f".{self.name}.config.json"

    def stamp(self, **kwargs) -> dict[str, Any]:
        options = {
            key: str(Path(value).resolve()) if isinstance(value, Path) else value
            for key, value in sorted(kwargs.items())
        }
        return {"config": self.config.model_dump(mode="json"), "options": options}

    def expected_outputs(self, **kwargs) -> list[str]:
        return list(self.output_files)

    def outputs_exist(self, **kwargs) -> bool:
        if not all((self.workdir / f).exists() for f in self.expected_outputs(**kwargs)):
            return False
        if not self.stamp_path.exists():
            return False
        return read_json(self.stamp_path) == self.stamp(**kwargs)

    def clean_outputs(self):
        for f in [*self.output_files, *self.optional_files, self.stamp_path.name]:
            (self.workdir / f).unlink(missing_ok=True)

    def _emit(self, callback: ProgressCallback | None, event: dict[str, Any]):
        if callback is not None:
            try:
                callback(event)
            except Exception:
                pass  # callback errors never break a run

    def _progress(self, callback: ProgressCallback | None, current: int, total: int):
        self._emit(callback, {
            "type": "step_progress", "step": self.name, "current": current, "total": total,
        })

    def run(self, progress_callback: ProgressCallback | None = None, **kwargs):
        if not self.force and self.outputs_exist(**kwargs):
            console.print(f"  [dim]Skipping {self.name}: outputs match this config[/dim]")
            self._emit(progress_callback, {"type": "step_skipped", "step": self.name})
            return

        console.print(f"  [bold cyan]Running {self.name}...[/bold cyan]")
        self._emit(progress_callback, {"type": "step_start", "step": self.name})
        self.clean_outputs()
        try:
            self.execute(progress_callback=progress_callback, **kwargs)
            write_json(self.stamp(**kwargs), self.stamp_path)
        except Exception as exc:
            console.print(f"  [bold red]{self.name} failed, removing partial outputs[/bold red]")
            self._emit(progress_callback, {"type": "error", "step": self.name, "message": str(exc)})
            self.clean_outputs()
            raise
        console.print(f"  [bold green]{self.name} complete[/bold green]")
        self._emit(progress_callback, {"type": "step_complete", "step": self.name})

    @abc.abstractmethod
    def execute(self, **kwargs):
        ...
