"""Solar production forecast series: remote fetch, file fixtures, synthesis.

A series is an ordered list of ``(UTC timestamp, watts)`` samples covering at
most three days ahead of the clock that produced it. Between samples the
power curve is taken as piecewise-linear; outside coverage it is zero.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from math import isfinite
from pathlib import Path

import requests

from .errors import (
    EmptyForecastError,
    ForecastDecodeError,
    ForecastFetchError,
    HorizonError,
    ValidationError,
)
from .timeutil import HORIZON, UTC, parse_ts

SOURCE_REMOTE = "remote"
SOURCE_FILE = "file"
SOURCE_SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class PanelSpec:
    """Solar installation parameters used to query the forecast service."""

    latitude: float
    longitude: float
    declination: float
    azimuth: float
    peak_power_kw: float

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")
        if self.peak_power_kw <= 0:
            raise ValidationError("peak power must be > 0 kW")


@dataclass(frozen=True)
class ForecastSeries:
    """Immutable forecast: strictly increasing timestamps, finite watts >= 0."""

    samples: tuple[tuple[datetime, float], ...]
    source: str = SOURCE_SYNTHETIC
    _times: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        prev = None
        for ts, watts in self.samples:
            if ts.tzinfo is None:
                raise ValidationError(f"naive timestamp {ts} in forecast")
            if prev is not None and ts <= prev:
                raise ValidationError(f"timestamps not strictly increasing at {ts}")
            if not isfinite(watts) or watts < 0:
                raise ValidationError(f"bad power value {watts!r} at {ts}")
            prev = ts
        # Cached epoch seconds for interpolation lookups.
        object.__setattr__(self, "_times", tuple(ts.timestamp() for ts, _ in self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def start(self) -> datetime:
        return self.samples[0][0]

    @property
    def end(self) -> datetime:
        return self.samples[-1][0]

    def is_empty(self) -> bool:
        return not self.samples


def power_at(series: ForecastSeries, t: datetime) -> float:
    """Interpolated power in watts at instant ``t``; zero outside coverage."""
    if series.is_empty():
        return 0.0
    ts = t.timestamp()
    times = series._times
    if ts < times[0] or ts > times[-1]:
        return 0.0
    idx = bisect_right(times, ts)
    if idx == 0:
        return series.samples[0][1]
    if idx >= len(times):
        return series.samples[-1][1]
    t0, t1 = times[idx - 1], times[idx]
    p0, p1 = series.samples[idx - 1][1], series.samples[idx][1]
    if t1 == t0:
        return p0
    frac = (ts - t0) / (t1 - t0)
    return p0 + (p1 - p0) * frac


def _build_series(pairs: list[tuple[datetime, float]], source: str) -> ForecastSeries:
    """Sort tolerant ingestion, but reject duplicate timestamps outright."""
    pairs = sorted(pairs, key=lambda p: p[0])
    for (a, _), (b, _) in zip(pairs, pairs[1:]):
        if a == b:
            raise ValidationError(f"duplicate forecast timestamp {a.isoformat()}")
    return ForecastSeries(samples=tuple(pairs), source=source)


def fetch_forecast(
    spec: PanelSpec,
    endpoint: str,
    now: datetime,
    timeout: float = 10.0,
) -> ForecastSeries:
    """Fetch the production estimate for a panel from a forecast service.

    The service answers ``GET /estimate/{lat}/{lon}/{dec}/{az}/{kwp}`` with
    ``{"result": {"watts": {"<ISO timestamp>": <watts>, ...}}}``. Timestamps
    may carry any offset (naive means UTC); the returned series is normalized
    to UTC and clamped to ``[now, now + 3 days]``.
    """
    url = "{}/estimate/{}/{}/{}/{}/{}".format(
        endpoint.rstrip("/"),
        spec.latitude,
        spec.longitude,
        spec.declination,
        spec.azimuth,
        spec.peak_power_kw,
    )
    try:
        response = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise ForecastFetchError(f"forecast request failed: {exc}", retriable=True) from exc
    if response.status_code != 200:
        raise ForecastFetchError(
            f"forecast service returned HTTP {response.status_code}",
            retriable=response.status_code >= 500,
        )
    try:
        payload = response.json()
    except ValueError as exc:
        raise ForecastDecodeError(f"forecast payload is not JSON: {exc}") from exc
    try:
        watts_map = payload["result"]["watts"]
    except (TypeError, KeyError) as exc:
        raise ForecastDecodeError("forecast payload missing result.watts") from exc
    if not isinstance(watts_map, dict):
        raise ForecastDecodeError("result.watts is not an object")
    if not watts_map:
        raise EmptyForecastError("forecast service returned an empty watts map")

    pairs: list[tuple[datetime, float]] = []
    for raw_ts, raw_watts in watts_map.items():
        try:
            ts = parse_ts(str(raw_ts))
            watts = float(raw_watts)
        except (ValidationError, TypeError, ValueError) as exc:
            raise ForecastDecodeError(f"bad forecast entry {raw_ts!r}: {exc}") from exc
        if not isfinite(watts) or watts < 0:
            raise ForecastDecodeError(f"bad power value {raw_watts!r} at {raw_ts}")
        pairs.append((ts, watts))

    return clamp_series(_build_series(pairs, SOURCE_REMOTE), now)


def load_forecast_file(path: str | Path) -> ForecastSeries:
    """Load a fixture: a JSON array of ``{"t": "<ISO UTC>", "w": <number>}``.

    Out-of-order records are tolerated and sorted; duplicates and negative
    watts are rejected. Horizon clamping is the caller's job (it needs a
    clock).
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"forecast fixture not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        records = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"forecast fixture {path} is not valid JSON (line {exc.lineno}, column {exc.colno})"
        ) from exc
    if not isinstance(records, list):
        raise ValidationError(f"forecast fixture {path} must be a JSON array")
    if not records:
        raise EmptyForecastError(f"forecast fixture {path} is empty")

    pairs: list[tuple[datetime, float]] = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or "t" not in rec or "w" not in rec:
            raise ValidationError(f"record {i} in {path}: expected object with 't' and 'w'")
        ts = parse_ts(str(rec["t"]))
        try:
            watts = float(rec["w"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"record {i} in {path}: bad 'w' value {rec['w']!r}") from exc
        if not isfinite(watts) or watts < 0:
            raise ValidationError(f"record {i} in {path}: power must be finite and >= 0")
        pairs.append((ts, watts))
    return _build_series(pairs, SOURCE_FILE)


def synth_forecast(
    day_profile: list[tuple[float, float]],
    days: int,
    start: datetime,
) -> ForecastSeries:
    """Deterministically repeat a one-day profile for ``days`` days.

    ``day_profile`` is a list of ``(hour_of_day, watts)`` points; hours may be
    fractional but must lie in ``[0, 24)``. Samples are anchored to the UTC
    midnight of ``start``'s day, so the profile keeps its wall-clock shape.
    """
    if not isinstance(days, int) or days < 1:
        raise ValidationError("days must be a positive integer")
    if days > 3:
        raise HorizonError(f"cannot synthesize {days} days: horizon is 3 days")
    if not day_profile:
        raise EmptyForecastError("day profile is empty")
    profile = sorted(day_profile, key=lambda p: p[0])
    for hour, _ in profile:
        if not 0.0 <= hour < 24.0:
            raise ValidationError(f"profile hour {hour} outside [0, 24)")

    day0 = start.astimezone(UTC).replace(hour=0, minute=0, second=0, microsecond=0)
    pairs = [
        (day0 + timedelta(days=d, hours=hour), float(watts))
        for d in range(days)
        for hour, watts in profile
    ]
    return _build_series(pairs, SOURCE_SYNTHETIC)


def dump_forecast_file(series: ForecastSeries, path: str | Path) -> None:
    """Write a series in the fixture format accepted by load_forecast_file."""
    payload = [{"t": ts.astimezone(UTC).isoformat(), "w": watts} for ts, watts in series.samples]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def clamp_series(series: ForecastSeries, now: datetime) -> ForecastSeries:
    """Restrict a series to the valid horizon ``[now, now + 3 days]``.

    The interval is clamped, not just the sample list: where a boundary cuts
    through a linear segment, an interpolated sample is inserted so the
    clamped series traces the same power curve inside the horizon.
    """
    horizon_end = now + HORIZON
    inner = [(ts, w) for ts, w in series.samples if now <= ts <= horizon_end]
    pairs: list[tuple[datetime, float]] = []
    if series.start < now <= series.end and (not inner or inner[0][0] > now):
        pairs.append((now, power_at(series, now)))
    pairs.extend(inner)
    if series.start <= horizon_end < series.end and (not pairs or pairs[-1][0] < horizon_end):
        pairs.append((horizon_end, power_at(series, horizon_end)))
    if not pairs:
        raise EmptyForecastError("no forecast samples inside [now, now + 3 days]")
    return ForecastSeries(samples=tuple(pairs), source=series.source)


# Named day profiles for seeding test environments. Watts are instantaneous;
# the triangular shapes keep window ranking strictly ordered around the peak.
DAY_PROFILES: dict[str, list[tuple[float, float]]] = {
    # Clear summer day: ramp 06:00 -> peak 3 kW at 12:00 -> down by 18:00.
    "clear-day": [(h, 3000.0 * (1.0 - abs(h - 12.0) / 6.0)) for h in range(6, 19)],
    # Morning-peaked day used by the replay scenario (peak 3 kW at 10:00 UTC).
    "morning-peak": [(h, 3000.0 * max(0.0, 1.0 - abs(h - 10.0) / 4.0)) for h in range(6, 15)],
    # Overcast: a flat 600 W plateau from 08:00 to 16:00.
    "overcast": [(7.0, 0.0)] + [(float(h), 600.0) for h in range(8, 17)] + [(17.0, 0.0)],
}
