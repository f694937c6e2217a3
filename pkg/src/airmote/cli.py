"""Command-line interface.

Exit codes: 0 success, 2 invalid scenario or arguments, 3 runtime fault
(plant instability, scheduling error).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import calibrate as calmod
from .engine import SchedulingError
from .plant import PlantError
from .report import report as build_report
from .scenario import ScenarioError, bundled_scenario_path, load_scenario
from .sim import Simulation

EXIT_INVALID = 2
EXIT_RUNTIME = 3

_UNITS = {"ms": 1, "s": 1000, "m": 60_000, "h": 3_600_000, "d": 86_400_000}


def parse_duration(text: str) -> int:
    """'90s', '10m', '3d', '500ms' or a bare millisecond count."""
    text = text.strip()
    for suffix in ("ms", "s", "m", "h", "d"):
        if text.endswith(suffix):
            num = text[:-len(suffix)]
            try:
                value = float(num)
            except ValueError:
                raise click.BadParameter(f"bad duration {text!r}")
            if value < 0:
                raise click.BadParameter("duration must be >= 0")
            return int(value * _UNITS[suffix])
    try:
        value = int(text)
    except ValueError:
        raise click.BadParameter(f"bad duration {text!r}")
    if value < 0:
        raise click.BadParameter("duration must be >= 0")
    return value


def _load(scenario: str):
    path = Path(scenario)
    if not path.exists():
        bundled = bundled_scenario_path(scenario if "." in scenario
                                        else scenario + ".scenario")
        if Path(bundled).exists():
            path = Path(bundled)
    try:
        return load_scenario(path)
    except FileNotFoundError:
        raise click.ClickException(f"scenario not found: {scenario}")
    except (ScenarioError, json.JSONDecodeError) as exc:
        if isinstance(exc, ScenarioError):
            for v in exc.violations:
                click.echo(f"invalid scenario: {v}", err=True)
        else:
            click.echo(f"invalid scenario: {exc}", err=True)
        sys.exit(EXIT_INVALID)


@click.group()
def main():
    """Deterministic sensor-network and cooling-plant simulator."""


@main.command()
@click.argument("scenario")
@click.option("--out", "-o", default="out", show_default=True,
              help="artifact directory")
@click.option("--duration", "-d", default=None,
              help="override run duration (e.g. 600s, 10m, 3d)")
@click.option("--seed", default=None, type=int, help="override the seed")
def run(scenario, out, duration, seed):
    """Run SCENARIO (a path or a bundled name) and write artifacts."""
    sc = _load(scenario)
    if seed is not None:
        sc.run.seed = seed
    d = sc.run.duration_ms if duration is None else parse_duration(duration)
    try:
        sim = Simulation(sc)
        sim.run(d)
        sim.write_outputs(out)
    except (PlantError, SchedulingError) as exc:
        click.echo(f"runtime fault: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    summary = sim.summary()
    click.echo(json.dumps(
        {"scenario": summary["scenario"], "seed": summary["seed"],
         "sim_time_ms": summary["sim_time_ms"],
         "delivery_ratio": summary["delivery_ratio"],
         "out": str(Path(out))}, indent=2))


@main.command("report")
@click.argument("artifact_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--delimiter", default="\t", help="table field delimiter")
def report_cmd(artifact_dir, delimiter):
    """Summarize a run directory: delimited table plus rendered figures."""
    try:
        table = build_report(artifact_dir, delimiter)
    except FileNotFoundError as exc:
        click.echo(f"missing artifact: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    click.echo(table)


@main.command()
@click.argument("scenario")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--pace", default=0.0, show_default=True,
              help="real seconds per simulated second (0 = free-running)")
def serve(scenario, host, port, pace):
    """Serve the web API (and dashboard, if built) for a live run."""
    import uvicorn

    from .webapi import create_app

    sc = _load(scenario)
    app = create_app(sc, pace=pace)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("calibrate")
def calibrate_cmd():
    """Print the calibrated plant constants for the default deployment."""
    cals = calmod.calibrate()
    s = calmod.Structural()
    out = {}
    for name, c in cals.items():
        out[name] = {
            "load_day_w": c.load_day_w,
            "load_night_w": c.load_night_w,
            "gain_w_per_c": c.gain_w_per_c,
            "setpoint_c": c.setpoint_c,
            "steady_day": calmod.steady_state(c, s, True),
            "steady_night": calmod.steady_state(c, s, False),
        }
    click.echo(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
