from __future__ import annotations

import json

import pytest
import yaml
from click.testing import CliRunner

from washy.cli import bundled_script_path, main
from washy.config import load_config
from washy.errors import ConfigError
from washy.forecast import load_forecast_file

from .conftest import T0


@pytest.fixture
def runner():
    return CliRunner()


def write_cfg(tmp_path, **overrides) -> str:
    cfg = {
        "listen": "127.0.0.1:8123",
        "data_dir": str(tmp_path / "data"),
        "clock": {"mode": "virtual", "start": T0.isoformat()},
        "scheduler": {"step_minutes": 15},
        "forecast": {"source": "synthetic", "profile": "morning-peak", "days": 3},
        "plug": {"driver": "simulated", "latched_at_start": True},
        "llm": {"backend": "mock"},
        "users": [
            {
                "id": "alice",
                "token": "alice-token",
                "display_name": "Alice",
                "timezone": "Europe/Rome",
                "persona": "traditional",
                "default_power_w": 2000,
            }
        ],
    }
    cfg.update(overrides)
    path = tmp_path / "washy.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


# -- config loading ------------------------------------------------------------------


def test_load_config_roundtrip(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    assert cfg.port == 8123
    assert cfg.step_minutes == 15
    assert cfg.users[0].id == "alice"
    assert cfg.clock_mode == "virtual"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_load_config_rejects_bad_values(tmp_path):
    path = write_cfg(tmp_path, clock={"mode": "virtual"})  # missing start
    with pytest.raises(ConfigError):
        load_config(path)
    path = write_cfg(tmp_path, forecast={"source": "file"})  # missing fixture
    with pytest.raises(ConfigError):
        load_config(path)
    path = write_cfg(tmp_path, plug={"driver": "http"})  # missing url templates
    with pytest.raises(ConfigError):
        load_config(path)


# -- forecast seed --------------------------------------------------------------------


def test_forecast_seed_writes_fixture(runner, tmp_path):
    out = tmp_path / "forecast.json"
    result = runner.invoke(
        main,
        ["forecast", "seed", "--profile", "morning-peak", "--days", "2", "--start", T0.isoformat(), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    series = load_forecast_file(out)
    assert len(series) == 18  # 9 profile points x 2 days
    assert series.source == "file"


def test_forecast_seed_fetch_uses_stub(runner, tmp_path, http_stub):
    http_stub.payloads["/estimate/"] = (
        200,
        {"result": {"watts": {(T0.isoformat()): 500, (T0.replace(hour=12).isoformat()): 900}}},
    )
    cfg_path = write_cfg(
        tmp_path,
        forecast={
            "source": "remote",
            "endpoint": http_stub.base_url,
            "fixture": str(tmp_path / "data" / "forecast.json"),
        },
        panel={"latitude": 45.0, "longitude": 9.0, "declination": 30, "azimuth": 0, "peak_power_kw": 5},
    )
    result = runner.invoke(
        main, ["forecast", "seed", "-c", cfg_path, "--fetch", "--start", T0.isoformat()]
    )
    assert result.exit_code == 0, result.output
    series = load_forecast_file(tmp_path / "data" / "forecast.json")
    assert len(series) == 2


def test_forecast_seed_without_target_is_env_error(runner):
    result = runner.invoke(main, ["forecast", "seed", "--profile", "clear-day"])
    assert result.exit_code == 2


# -- report windows ------------------------------------------------------------------


def test_report_windows_csv_columns(runner, tmp_path):
    cfg_path = write_cfg(tmp_path)
    result = runner.invoke(
        main,
        [
            "report", "windows",
            "-c", cfg_path,
            "--power", "2000",
            "--duration", "60",
            "--timezone", "Europe/Rome",
            "--now", T0.isoformat(),
            "--csv",
        ],
    )
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "# required_wh=2000.0"
    assert lines[1] == "start_utc,start_local,production_wh,ratio,quality,exceeds_required"
    first = lines[2].split(",")
    assert first[0].startswith("2025-06-02T09:30")  # best window first
    assert first[4] == "Good"
    assert first[5] == "true"


def test_report_windows_table_mode(runner, tmp_path):
    cfg_path = write_cfg(tmp_path)
    result = runner.invoke(
        main,
        ["report", "windows", "-c", cfg_path, "--power", "2000", "--duration", "60", "--now", T0.isoformat()],
    )
    assert result.exit_code == 0
    assert "start_utc" in result.output
    assert "Good" in result.output


# -- replay ----------------------------------------------------------------------------


def test_replay_bundled_script_both_personas(runner):
    result = runner.invoke(main, ["replay", str(bundled_script_path()), "--persona", "both"])
    assert result.exit_code == 0, result.output
    assert "PASS persona=traditional" in result.output
    assert "PASS persona=personified" in result.output


def test_replay_deterministic_output(runner):
    args = ["replay", str(bundled_script_path()), "--persona", "traditional"]
    first = runner.invoke(main, args)
    second = runner.invoke(main, args)
    assert first.output == second.output


def test_replay_corrupted_script_exits_1(runner, tmp_path):
    script = json.loads(bundled_script_path().read_text())
    script["steps"][1]["expect_tools"] = ["warp_drive"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(script))
    result = runner.invoke(main, ["replay", str(path), "--persona", "traditional"])
    assert result.exit_code == 1
    assert "warp_drive" in result.output
    assert "FAIL" in result.output


def test_replay_missing_script_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["replay", str(tmp_path / "none.json")])
    assert result.exit_code == 2


def test_replay_rejects_wall_clock(runner):
    result = runner.invoke(
        main, ["replay", str(bundled_script_path()), "--no-virtual-clock"]
    )
    assert result.exit_code == 2


# -- clock step -------------------------------------------------------------------------


def test_clock_step_posts_to_server(runner, http_stub):
    http_stub.payloads["/clock/step"] = (200, {"now": "2025-06-02T09:15:00+00:00", "fired": 1})
    result = runner.invoke(
        main,
        ["clock", "step", "2m", "--server", http_stub.base_url, "--token", "alice-token"],
    )
    assert result.exit_code == 0, result.output
    assert http_stub.requests[-1] == {"seconds": 120}
    assert "now=2025-06-02T09:15:00+00:00" in result.output


def test_clock_step_bad_duration(runner):
    result = runner.invoke(
        main, ["clock", "step", "soon", "--server", "http://x", "--token", "t"]
    )
    assert result.exit_code == 2


def test_clock_step_unreachable_server(runner):
    result = runner.invoke(
        main, ["clock", "step", "1m", "--server", "http://127.0.0.1:9", "--token", "t"]
    )
    assert result.exit_code == 2
