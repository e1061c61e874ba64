"""Small helpers for the package's time discipline.

Everything is stored and computed in aware UTC datetimes; conversion to the
user's timezone happens only at the rendering edge.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from .errors import ValidationError

UTC = timezone.utc

HORIZON = timedelta(days=3)


def parse_ts(value: str) -> datetime:
    """Parse an ISO-8601 timestamp into aware UTC.

    Accepts a trailing ``Z``, any explicit offset, or a naive timestamp
    (interpreted as UTC). A space separator between date and time is fine.
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValidationError(f"bad timestamp {value!r}: {exc}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=UTC)
    return dt.astimezone(UTC)


def iso_utc(dt: datetime) -> str:
    """Render an aware datetime as ISO-8601 in UTC with explicit offset."""
    return dt.astimezone(UTC).isoformat()


def resolve_tz(name: str) -> ZoneInfo:
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ValidationError(f"unknown timezone {name!r}") from exc


def local_str(dt: datetime, tz: ZoneInfo | str, fmt: str = "%Y-%m-%d %H:%M") -> str:
    """Render a UTC instant in the user's timezone."""
    if isinstance(tz, str):
        tz = resolve_tz(tz)
    return dt.astimezone(tz).strftime(fmt)


def ceil_to_step(dt: datetime, step_minutes: int) -> datetime:
    """Round up to the next boundary of an epoch-anchored step grid.

    An instant already on the grid stays put. Sub-second components are
    ceiled to the next whole second first.
    """
    step_s = step_minutes * 60
    secs = int(math.ceil(dt.timestamp()))
    aligned = -(-secs // step_s) * step_s
    return datetime.fromtimestamp(aligned, tz=UTC)


def hours_between(a: datetime, b: datetime) -> float:
    return (b - a).total_seconds() / 3600.0
