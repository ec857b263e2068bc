"""Chorus localization CLI: simulate, sweep, analyze and replay experiments."""

import sys
from pathlib import Path

import click
from rich.panel import Panel
from rich.table import Table

from src.config import (
    DEFAULT_CONFIG,
    DEFAULT_PRESETS,
    ConfigError,
    build_config,
    ensure_workdir,
    load_preset,
    resolve_config,
)
from src.models import MetricsReport
from src.pipeline.base import console, set_quiet
from src.runner import STEP_MAP, STEPS_ORDER, aggregate_sweep, run_sweep
from src.utils.io import read_json

config_option = click.option("--config", "config_path", default=DEFAULT_CONFIG,
                             help="Path to YAML or JSON config file")
preset_option = click.option("--preset", default=None, help="Named preset from the presets file")
presets_option = click.option("--presets", "presets_path", default=DEFAULT_PRESETS,
                              help="Path to the presets file")
workdir_option = click.option("--workdir", required=True, type=click.Path(),
                              help="Working directory for outputs")
force_option = click.option("--force", is_flag=True, default=False,
                            help="Re-run steps even if outputs exist")


def _fail(message: str):
    console.quiet = False
    console.print(f"[bold red]{message}[/bold red]")
    sys.exit(1)


def _load(config_path, preset_name, presets_path, **overrides):
    try:
        preset = load_preset(preset_name, presets_path) if preset_name else None
        raw = resolve_config(config_path, preset, **overrides)
        return preset, raw, build_config(raw)
    except ConfigError as exc:
        _fail(f"Invalid configuration: {exc}")


def _run_steps(steps, work_path: Path, config, force: bool, **kwargs):
    for step_name in steps:
        step = STEP_MAP[step_name](workdir=work_path, config=config, force=force)
        try:
            step.run(**kwargs)
        except Exception as e:
            _fail(f"\nPipeline failed at step '{step_name}': {e}")


def _report_table(report: MetricsReport) -> Table:
    table = Table(title="Summary")
    table.add_column("metric")
    table.add_column("value", justify="right")
    table.add_row("p50 error (cm)", f"{report.p50 * 100:.3f}")
    table.add_row("p90 error (cm)", f"{report.p90 * 100:.3f}")
    table.add_row("p99 error (cm)", f"{report.p99 * 100:.3f}")
    table.add_row("located fixes", str(report.located))
    table.add_row("targets per slot", f"{report.efficiency:.2f}")
    table.add_row("predicted fraction", f"{report.predicted_fraction:.3f}")
    table.add_row("losses", str(report.losses))
    if report.d_s is not None:
        table.add_row("d_s (m)", f"{report.d_s:.3f}")
    return table


@click.group()
@click.option("--quiet", is_flag=True, default=False, help="Silence console output")
def cli(quiet: bool):
    """Chorus-mode multi-target ultrasound localization simulator."""
    set_quiet(quiet)


@cli.command()
@click.option("--seed", type=int, required=True, help="Scenario seed")
@workdir_option
@config_option
@preset_option
@presets_option
@force_option
@click.option("--slots", type=int, default=None, help="Number of slots (overrides config)")
@click.option("--omega", type=float, default=None, help="Confident separation distance ω in m")
@click.option("--noise", type=float, default=None, help="Max ranging offset l_o in m")
@click.option("--targets", type=int, default=None, help="Number of targets")
def run(seed, workdir, config_path, preset, presets_path, force, slots, omega, noise, targets):
    """Simulate one experiment and compute its metrics."""
    console.print(Panel.fit("[bold]Chorus localization[/bold]: single run", border_style="cyan"))
    _, _, config = _load(config_path, preset, presets_path, seed=seed, slots=slots,
                         omega=omega, noise=noise, targets=targets)
    work_path = ensure_workdir(workdir)
    console.print(f"  Workdir: {work_path}")
    console.print(f"  Seed:    {config.scenario.seed}")
    console.print()

    _run_steps(STEPS_ORDER, work_path, config, force)

    report = MetricsReport.model_validate(read_json(work_path / "summary.json"))
    console.print()
    console.print(_report_table(report))


@cli.command()
@click.option("--preset", required=True, help="Preset with a sweep variable")
@workdir_option
@config_option
@presets_option
@force_option
@click.option("--seeds", type=int, default=10, help="Number of seeds per value")
@click.option("--seed-start", type=int, default=0, help="First seed")
@click.option("--slots", type=int, default=None, help="Number of slots (overrides config)")
@click.option("--workers", type=int, default=1, help="Worker processes")
def sweep(preset, workdir, config_path, presets_path, force, seeds, seed_start, slots, workers):
    """Run a preset's sweep values across seeds."""
    console.print(Panel.fit(f"[bold]Chorus localization[/bold]: sweep '{preset}'",
                            border_style="cyan"))
    chosen, raw, _ = _load(config_path, preset, presets_path, slots=slots)
    work_path = ensure_workdir(workdir)
    seed_list = list(range(seed_start, seed_start + seeds))
    try:
        rows = run_sweep(raw, chosen, seed_list, work_path, workers, force)
    except ConfigError as exc:
        _fail(f"Invalid configuration: {exc}")
    except Exception as e:
        _fail(f"\nSweep failed: {e}")

    table = Table(title=f"{chosen.sweep.value} sweep")
    for column in ("value", "seeds", "p50 (cm)", "p90 (cm)", "targets/slot", "loss rate"):
        table.add_column(column, justify="right")
    for entry in aggregate_sweep(rows):
        table.add_row(f"{entry['value']:g}", str(entry["seeds"]), f"{entry['p50'] * 100:.2f}",
                      f"{entry['p90'] * 100:.2f}", f"{entry['efficiency']:.2f}",
                      f"{entry['loss_rate']:.4f}")
    console.print(table)


@cli.command()
@workdir_option
@config_option
@preset_option
@presets_option
@force_option
@click.option("--monte-carlo", "monte_carlo", type=int, default=0,
              help="Samples for the Monte Carlo check of each blind-region area (0 = skip)")
def analyze(workdir, config_path, preset, presets_path, force, monte_carlo):
    """Write blind-region and feasibility tables."""
    _, _, config = _load(config_path, preset, presets_path)
    work_path = ensure_workdir(workdir)
    _run_steps(["analyze"], work_path, config, force, monte_carlo_samples=monte_carlo)


@cli.command()
@click.option("--source", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory holding receivers.csv, schedule.csv and distances.csv")
@workdir_option
@config_option
@preset_option
@presets_option
@force_option
def replay(source, workdir, config_path, preset, presets_path, force):
    """Re-run the locator on recorded distances."""
    _, _, config = _load(config_path, preset, presets_path)
    work_path = ensure_workdir(workdir)
    _run_steps(["replay"], work_path, config, force, source=Path(source))


main = cli


if __name__ == "__main__":
    cli()
