"""Injectable clock: wall time in production, virtual time in tests.

All time-dependent logic (reminder ticks, horizon checks, prompt rendering)
reads one of these instead of calling ``datetime.now`` directly, so whole
scenarios replay deterministically in milliseconds.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone


class Clock:
    """Interface: ``now()`` returns an aware UTC datetime."""

    def now(self) -> datetime:
        raise NotImplementedError


class WallClock(Clock):
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class VirtualClock(Clock):
    """Manually advanced clock; never moves on its own."""

    def __init__(self, start: datetime):
        if start.tzinfo is None:
            raise ValueError("virtual clock start must be timezone-aware")
        self._now = start.astimezone(timezone.utc)

    def now(self) -> datetime:
        return self._now

    def advance(self, delta: timedelta) -> datetime:
        if delta.total_seconds() < 0:
            raise ValueError("clock cannot move backwards")
        self._now += delta
        return self._now

    def set(self, instant: datetime) -> datetime:
        instant = instant.astimezone(timezone.utc)
        if instant < self._now:
            raise ValueError("clock cannot move backwards")
        self._now = instant
        return self._now
