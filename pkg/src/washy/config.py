"""Application configuration: one YAML (or JSON) file.

Documented keys:

    listen: "127.0.0.1:8099"        # serve address
    data_dir: "data"                # JSON document stores live here
    tick_seconds: 10                # reminder tick cadence (wall clock)
    clock:
      mode: wall | virtual
      start: "2025-06-02T09:13:00Z" # virtual mode only
    scheduler:
      step_minutes: 15              # window enumeration grid
    forecast:
      source: file | remote | synthetic
      fixture: "data/forecast.json" # file source
      endpoint: "https://..."       # remote source (forecast-service base URL)
      profile: "morning-peak"       # synthetic source, see forecast.DAY_PROFILES
      days: 3
    panel:                          # solar installation for remote fetches
      latitude: 45.46
      longitude: 9.19
      declination: 30
      azimuth: 0
      peak_power_kw: 5.0
    plug:
      driver: simulated | http
      latched_at_start: true        # machine primed with a program
      on_url / off_url / status_url / status_field   # http driver
    llm:
      backend: mock | remote        # remote also reads WASHY_LLM_URL,
      url / model / key             # WASHY_LLM_KEY, WASHY_LLM_MODEL
    users:
      - id: alice
        token: alice-token
        display_name: Alice
        timezone: Europe/Rome
        persona: traditional | personified
        default_power_w: 2000
        panel: {latitude: ..., ...}   # optional per-user override
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .forecast import PanelSpec
from .prompts import PersonaKind
from .timeutil import parse_ts


@dataclass
class UserAccount:
    id: str
    token: str
    display_name: str
    timezone: str
    persona: PersonaKind
    default_power_w: float = 2000.0
    panel: PanelSpec | None = None  # falls back to the config-level panel


@dataclass
class AppConfig:
    listen: str = "127.0.0.1:8099"
    data_dir: Path = Path("data")
    tick_seconds: float = 10.0
    clock_mode: str = "wall"
    clock_start: str | None = None
    step_minutes: int = 15
    forecast_source: str = "synthetic"
    forecast_fixture: Path | None = None
    forecast_endpoint: str | None = None
    forecast_profile: str = "clear-day"
    forecast_days: int = 3
    panel: PanelSpec | None = None
    plug_driver: str = "simulated"
    plug_latched_at_start: bool = False
    plug_urls: dict = field(default_factory=dict)
    llm_backend: str = "mock"
    llm_url: str | None = None
    llm_model: str | None = None
    llm_key: str | None = None
    users: list[UserAccount] = field(default_factory=list)

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    def user_by_token(self, token: str) -> UserAccount | None:
        for user in self.users:
            if user.token == token:
                return user
        return None


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path = Path(".")) -> AppConfig:
    cfg = AppConfig()
    cfg.listen = str(raw.get("listen", cfg.listen))
    cfg.data_dir = _resolve(base_dir, raw.get("data_dir", "data"))
    cfg.tick_seconds = float(raw.get("tick_seconds", cfg.tick_seconds))

    clock = raw.get("clock") or {}
    cfg.clock_mode = clock.get("mode", "wall")
    if cfg.clock_mode not in ("wall", "virtual"):
        raise ConfigError(f"clock.mode must be wall or virtual, got {cfg.clock_mode!r}")
    cfg.clock_start = clock.get("start")
    if cfg.clock_mode == "virtual":
        if not cfg.clock_start:
            raise ConfigError("clock.start is required in virtual mode")
        parse_ts(cfg.clock_start)  # fail fast on bad timestamps

    cfg.step_minutes = int((raw.get("scheduler") or {}).get("step_minutes", cfg.step_minutes))

    forecast = raw.get("forecast") or {}
    cfg.forecast_source = forecast.get("source", cfg.forecast_source)
    if cfg.forecast_source not in ("file", "remote", "synthetic"):
        raise ConfigError(f"forecast.source must be file, remote or synthetic, got {cfg.forecast_source!r}")
    if forecast.get("fixture"):
        cfg.forecast_fixture = _resolve(base_dir, forecast["fixture"])
    cfg.forecast_endpoint = forecast.get("endpoint")
    cfg.forecast_profile = forecast.get("profile", cfg.forecast_profile)
    cfg.forecast_days = int(forecast.get("days", cfg.forecast_days))
    if cfg.forecast_source == "file" and cfg.forecast_fixture is None:
        raise ConfigError("forecast.fixture is required when forecast.source is file")
    if cfg.forecast_source == "remote" and not cfg.forecast_endpoint:
        raise ConfigError("forecast.endpoint is required when forecast.source is remote")

    panel = raw.get("panel")
    if panel:
        cfg.panel = PanelSpec(
            latitude=float(panel["latitude"]),
            longitude=float(panel["longitude"]),
            declination=float(panel.get("declination", 30.0)),
            azimuth=float(panel.get("azimuth", 0.0)),
            peak_power_kw=float(panel.get("peak_power_kw", 5.0)),
        )
    if cfg.forecast_source == "remote" and cfg.panel is None:
        raise ConfigError("panel is required when forecast.source is remote")

    plug = raw.get("plug") or {}
    cfg.plug_driver = plug.get("driver", cfg.plug_driver)
    if cfg.plug_driver not in ("simulated", "http"):
        raise ConfigError(f"plug.driver must be simulated or http, got {cfg.plug_driver!r}")
    cfg.plug_latched_at_start = bool(plug.get("latched_at_start", False))
    cfg.plug_urls = {
        key: plug.get(key)
        for key in ("on_url", "off_url", "status_url", "status_field")
        if plug.get(key)
    }
    if cfg.plug_driver == "http":
        missing = {"on_url", "off_url", "status_url"} - set(cfg.plug_urls)
        if missing:
            raise ConfigError(f"http plug driver needs {', '.join(sorted(missing))}")

    llm = raw.get("llm") or {}
    cfg.llm_backend = llm.get("backend", cfg.llm_backend)
    if cfg.llm_backend not in ("mock", "remote"):
        raise ConfigError(f"llm.backend must be mock or remote, got {cfg.llm_backend!r}")
    cfg.llm_url = os.environ.get("WASHY_LLM_URL", llm.get("url"))
    cfg.llm_model = os.environ.get("WASHY_LLM_MODEL", llm.get("model"))
    cfg.llm_key = os.environ.get("WASHY_LLM_KEY", llm.get("key"))
    if cfg.llm_backend == "remote" and not (cfg.llm_url and cfg.llm_model):
        raise ConfigError("remote llm backend needs llm.url and llm.model (or WASHY_LLM_* env)")

    for i, entry in enumerate(raw.get("users") or []):
        try:
            persona = PersonaKind(str(entry.get("persona", "traditional")).lower())
        except ValueError as exc:
            raise ConfigError(f"users[{i}]: persona must be traditional or personified") from exc
        user_panel = None
        if entry.get("panel"):
            p = entry["panel"]
            user_panel = PanelSpec(
                latitude=float(p["latitude"]),
                longitude=float(p["longitude"]),
                declination=float(p.get("declination", 30.0)),
                azimuth=float(p.get("azimuth", 0.0)),
                peak_power_kw=float(p.get("peak_power_kw", 5.0)),
            )
        try:
            cfg.users.append(
                UserAccount(
                    id=str(entry["id"]),
                    token=str(entry["token"]),
                    display_name=str(entry.get("display_name", entry["id"])),
                    timezone=str(entry.get("timezone", "UTC")),
                    persona=persona,
                    default_power_w=float(entry.get("default_power_w", 2000.0)),
                    panel=user_panel,
                )
            )
        except KeyError as exc:
            raise ConfigError(f"users[{i}]: missing field {exc}") from exc
    return cfg


def _resolve(base_dir: Path, value: str | Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base_dir / p
