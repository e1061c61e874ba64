"""Command-line operation: serve, seed forecasts, replay scripts, step time.

Exit codes: 0 success, 1 assertion mismatch (replay), 2 environment error.
"""

from __future__ import annotations

import csv
import io
import re
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import click
import requests

from .config import load_config
from .errors import WashyError
from .forecast import DAY_PROFILES, dump_forecast_file, fetch_forecast, load_forecast_file, synth_forecast
from .prompts import PersonaKind
from .replay import load_script, run_replay
from .scheduler import LaundryRequest, ranked_windows, required_energy
from .timeutil import iso_utc, local_str, parse_ts

ENV_ERROR = 2
MISMATCH = 1


def bundled_script_path() -> Path:
    """Path of the packaged end-to-end replay script."""
    return Path(str(resources.files("washy").joinpath("data/lab_tasks.json")))


@click.group()
def main():
    """Solar-aware laundry scheduling service and tooling."""


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
def serve(config_path: str):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        cfg = load_config(config_path)
        app = create_app(cfg)
    except WashyError as exc:
        raise SystemExit(_env_error(str(exc)))
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")


@main.group()
def forecast():
    """Forecast fixture management."""


@forecast.command("seed")
@click.option("--config", "-c", "config_path", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="Fixture path (defaults to the configured one)")
@click.option("--profile", type=click.Choice(sorted(DAY_PROFILES)), default=None)
@click.option("--days", type=int, default=3)
@click.option("--start", "start_iso", default=None, help="Anchor instant (ISO-8601, default: now)")
@click.option("--fetch", is_flag=True, help="Fetch from the configured remote endpoint instead")
def forecast_seed(config_path, out, profile, days, start_iso, fetch):
    """Write a forecast fixture into the data directory."""
    try:
        cfg = load_config(config_path) if config_path else None
        now = parse_ts(start_iso) if start_iso else datetime.now(timezone.utc)
        if fetch:
            if cfg is None or not cfg.forecast_endpoint or cfg.panel is None:
                raise SystemExit(_env_error("--fetch needs a config with forecast.endpoint and panel"))
            series = fetch_forecast(cfg.panel, cfg.forecast_endpoint, now)
        else:
            name = profile or (cfg.forecast_profile if cfg else "clear-day")
            series = synth_forecast(DAY_PROFILES[name], days, now)
        target = Path(out) if out else (cfg.forecast_fixture if cfg else None)
        if target is None:
            raise SystemExit(_env_error("no output path: pass --out or a config with forecast.fixture"))
        dump_forecast_file(series, target)
    except WashyError as exc:
        raise SystemExit(_env_error(str(exc)))
    click.echo(f"wrote {len(series)} samples to {target}")


@main.command()
@click.argument("script_path", type=click.Path())
@click.option(
    "--persona",
    type=click.Choice(["traditional", "personified", "both"]),
    default="both",
    show_default=True,
)
@click.option("--virtual-clock/--no-virtual-clock", default=True, show_default=True)
def replay(script_path: str, persona: str, virtual_clock: bool):
    """Replay a scripted dialogue against the mock backend and report mismatches."""
    if not virtual_clock:
        raise SystemExit(_env_error("replays require the virtual clock"))
    try:
        script = load_script(script_path)
    except WashyError as exc:
        raise SystemExit(_env_error(str(exc)))
    personas = (
        [PersonaKind.TRADITIONAL, PersonaKind.PERSONIFIED]
        if persona == "both"
        else [PersonaKind(persona)]
    )
    failed = False
    for kind in personas:
        try:
            report = run_replay(script, kind)
        except WashyError as exc:
            raise SystemExit(_env_error(str(exc)))
        click.echo(report.text())
        failed = failed or not report.ok
    raise SystemExit(MISMATCH if failed else 0)


@main.group()
def clock():
    """Virtual clock control for a test-mode server."""


@clock.command("step")
@click.argument("duration")
@click.option("--server", required=True, help="Base URL of the running service")
@click.option("--token", required=True, help="Bearer token of any configured user")
def clock_step(duration: str, server: str, token: str):
    """Advance a test-mode server's virtual clock, e.g. '90s', '2m', '1h'."""
    seconds = _parse_duration(duration)
    if seconds is None:
        raise SystemExit(_env_error(f"cannot parse duration {duration!r} (use 30s / 5m / 1h)"))
    try:
        response = requests.post(
            f"{server.rstrip('/')}/clock/step",
            json={"seconds": seconds},
            headers={"Authorization": f"Bearer {token}"},
            timeout=10,
        )
    except requests.RequestException as exc:
        raise SystemExit(_env_error(f"server unreachable: {exc}"))
    if response.status_code != 200:
        raise SystemExit(_env_error(f"server answered HTTP {response.status_code}: {response.text}"))
    payload = response.json()
    click.echo(f"now={payload['now']} fired={payload['fired']}")


@main.group()
def report():
    """Read-only reports."""


@report.command("windows")
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@click.option("--power", type=float, required=True, help="Cycle draw in watts")
@click.option("--duration", type=float, required=True, help="Cycle duration in minutes")
@click.option("--timezone", "tz_name", default="UTC", show_default=True)
@click.option("--now", "now_iso", default=None, help="Evaluation instant (ISO-8601, default: now)")
@click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of a table")
def report_windows(config_path, power, duration, tz_name, now_iso, as_csv):
    """Print the ranked window table with quality labels."""
    try:
        cfg = load_config(config_path)
        now = parse_ts(now_iso) if now_iso else datetime.now(timezone.utc)
        if cfg.forecast_source == "file":
            from .forecast import clamp_series

            series = clamp_series(load_forecast_file(cfg.forecast_fixture), now)
        elif cfg.forecast_source == "remote":
            series = fetch_forecast(cfg.panel, cfg.forecast_endpoint, now)
        else:
            series = synth_forecast(DAY_PROFILES[cfg.forecast_profile], cfg.forecast_days, now)
        req = LaundryRequest(power_w=power, duration_minutes=duration)
        ranked = ranked_windows(series, req, now, cfg.step_minutes)
    except WashyError as exc:
        raise SystemExit(_env_error(str(exc)))

    best = ranked.best.production_wh
    header = ["start_utc", "start_local", "production_wh", "ratio", "quality", "exceeds_required"]
    rows = [
        [
            iso_utc(w.start),
            local_str(w.start, tz_name),
            f"{w.production_wh:.1f}",
            f"{(w.production_wh / best if best > 0 else 0.0):.3f}",
            w.quality.value,
            str(w.exceeds_required).lower(),
        ]
        for w in ranked.windows
    ]
    click.echo(f"# required_wh={required_energy(req):.1f}")
    if as_csv:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(header)
        writer.writerows(rows)
        click.echo(buffer.getvalue().rstrip("\n"))
    else:
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
        click.echo("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
        for row in rows:
            click.echo("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))


def _parse_duration(text: str) -> int | None:
    m = re.fullmatch(r"(\d+)\s*([smh]?)", text.strip().lower())
    if not m:
        return None
    value, unit = int(m.group(1)), m.group(2) or "s"
    return value * {"s": 1, "m": 60, "h": 3600}[unit]


def _env_error(message: str) -> int:
    click.echo(f"error: {message}", err=True)
    return ENV_ERROR


if __name__ == "__main__":
    main()
