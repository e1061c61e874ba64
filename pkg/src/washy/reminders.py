"""Booked laundry slots: notification lifecycle and auto-start.

A reminder moves along a fixed transition table:

    Scheduled -> Notified (tick at notify_at) | Cancelled
    Notified  -> Confirmed | Cancelled | Expired (tick at slot start)
    Confirmed -> Started (tick at slot start) | Cancelled
    Started / Cancelled / Expired are terminal.

An unconfirmed reminder lapses at its slot start and the machine does not
start: the user has to take part. Notification events stay queued until the
client acknowledges them, which makes delivery pollable and testable.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Callable

from .clock import Clock
from .errors import (
    DeviceError,
    LeadRangeError,
    PastSlotError,
    TransitionError,
    UnknownReminderError,
    ValidationError,
)
from .scheduler import SlotQuality
from .timeutil import iso_utc, parse_ts
from .storage import JsonStore

logger = logging.getLogger(__name__)

MAX_LEAD_MINUTES = 60
RECENTLY_EXPIRED_WINDOW = timedelta(hours=24)


class ReminderState(str, Enum):
    SCHEDULED = "Scheduled"
    NOTIFIED = "Notified"
    CONFIRMED = "Confirmed"
    STARTED = "Started"
    CANCELLED = "Cancelled"
    EXPIRED = "Expired"


ACTIVE_STATES = {ReminderState.SCHEDULED, ReminderState.NOTIFIED, ReminderState.CONFIRMED}
TERMINAL_STATES = {ReminderState.STARTED, ReminderState.CANCELLED, ReminderState.EXPIRED}


@dataclass(frozen=True)
class Reminder:
    id: str
    user: str
    slot_start: datetime
    duration_minutes: float
    lead_minutes: int
    state: ReminderState
    quality_at_booking: SlotQuality
    created_at: datetime

    @property
    def notify_at(self) -> datetime:
        return self.slot_start - timedelta(minutes=self.lead_minutes)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "user": self.user,
            "slot_start": iso_utc(self.slot_start),
            "duration_minutes": self.duration_minutes,
            "lead_minutes": self.lead_minutes,
            "state": self.state.value,
            "quality_at_booking": self.quality_at_booking.value,
            "created_at": iso_utc(self.created_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Reminder":
        return cls(
            id=data["id"],
            user=data["user"],
            slot_start=parse_ts(data["slot_start"]),
            duration_minutes=float(data["duration_minutes"]),
            lead_minutes=int(data["lead_minutes"]),
            state=ReminderState(data["state"]),
            quality_at_booking=SlotQuality(data["quality_at_booking"]),
            created_at=parse_ts(data["created_at"]),
        )


@dataclass
class NotificationEvent:
    id: str
    reminder_id: str
    user: str
    fires_at: datetime
    acknowledged: bool = False

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "reminder_id": self.reminder_id,
            "user": self.user,
            "fires_at": iso_utc(self.fires_at),
            "acknowledged": self.acknowledged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NotificationEvent":
        return cls(
            id=data["id"],
            reminder_id=data["reminder_id"],
            user=data["user"],
            fires_at=parse_ts(data["fires_at"]),
            acknowledged=bool(data["acknowledged"]),
        )


@dataclass
class StartFailure:
    """Auto-start attempt that failed; the reminder stays Confirmed for retry."""

    reminder_id: str
    at: datetime
    message: str


class ReminderBook:
    """Serialized-writer store for reminders and their notification events.

    All mutations take one lock and are applied in a total order; reads build
    snapshots under the same lock. Persistence is a single JSON document,
    rewritten atomically after every mutation (skipped when ``path`` is None,
    e.g. in replays).
    """

    def __init__(
        self,
        clock: Clock,
        path: str | Path | None = None,
        appliance_start: Callable[[], object] | None = None,
    ):
        self.clock = clock
        self.appliance_start = appliance_start
        self._store = JsonStore(path) if path is not None else None
        self._lock = threading.RLock()
        self._reminders: dict[str, Reminder] = {}
        self._events: dict[str, NotificationEvent] = {}
        self._next_reminder = 1
        self._next_event = 1
        self._start_failures: list[StartFailure] = []
        self._load()

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        if self._store is None or not self._store.exists():
            return
        doc = self._store.read()
        self._reminders = {r["id"]: Reminder.from_dict(r) for r in doc.get("reminders", [])}
        self._events = {e["id"]: NotificationEvent.from_dict(e) for e in doc.get("events", [])}
        self._next_reminder = int(doc.get("next_reminder", len(self._reminders) + 1))
        self._next_event = int(doc.get("next_event", len(self._events) + 1))

    def _save(self) -> None:
        if self._store is None:
            return
        self._store.write(
            {
                "version": 1,
                "next_reminder": self._next_reminder,
                "next_event": self._next_event,
                "reminders": [r.as_dict() for r in self._reminders.values()],
                "events": [e.as_dict() for e in self._events.values()],
            }
        )

    # -- operations -------------------------------------------------------

    def schedule(
        self,
        user: str,
        slot_start: datetime,
        duration_minutes: float,
        lead_minutes: int,
        quality: SlotQuality,
    ) -> Reminder:
        now = self.clock.now()
        if slot_start <= now:
            raise PastSlotError(
                f"slot start {iso_utc(slot_start)} is not in the future (now {iso_utc(now)})"
            )
        if not 0 <= int(lead_minutes) <= MAX_LEAD_MINUTES:
            raise LeadRangeError(f"lead must be between 0 and 60 minutes, got {lead_minutes}")
        if duration_minutes <= 0:
            raise ValidationError("duration must be > 0 minutes")
        with self._lock:
            reminder = Reminder(
                id=f"r-{self._next_reminder:04d}",
                user=user,
                slot_start=slot_start,
                duration_minutes=duration_minutes,
                lead_minutes=int(lead_minutes),
                state=ReminderState.SCHEDULED,
                quality_at_booking=quality,
                created_at=now,
            )
            self._next_reminder += 1
            self._reminders[reminder.id] = reminder
            self._save()
            return reminder

    def get(self, reminder_id: str, user: str | None = None) -> Reminder:
        reminder = self._reminders.get(reminder_id)
        if reminder is None or (user is not None and reminder.user != user):
            raise UnknownReminderError(f"no reminder {reminder_id!r}")
        return reminder

    def confirm(self, reminder_id: str, user: str | None = None) -> Reminder:
        with self._lock:
            reminder = self.get(reminder_id, user)
            if reminder.state is not ReminderState.NOTIFIED:
                raise TransitionError(
                    f"cannot confirm reminder in state {reminder.state.value}",
                    reminder.state.value,
                )
            return self._transition(reminder, ReminderState.CONFIRMED)

    def cancel(self, reminder_id: str, user: str | None = None) -> Reminder:
        with self._lock:
            reminder = self.get(reminder_id, user)
            if reminder.state in TERMINAL_STATES:
                raise TransitionError(
                    f"cannot cancel reminder in state {reminder.state.value}",
                    reminder.state.value,
                )
            return self._transition(reminder, ReminderState.CANCELLED)

    def delete(self, reminder_id: str, user: str | None = None) -> None:
        with self._lock:
            reminder = self.get(reminder_id, user)
            del self._reminders[reminder.id]
            self._save()

    def list_for(self, user: str, now: datetime | None = None) -> tuple[list[Reminder], list[Reminder]]:
        """Partition into (active, recently expired), both by ascending slot."""
        now = now or self.clock.now()
        cutoff = now - RECENTLY_EXPIRED_WINDOW
        with self._lock:
            mine = [r for r in self._reminders.values() if r.user == user]
        active = sorted((r for r in mine if r.state in ACTIVE_STATES), key=lambda r: r.slot_start)
        recent = sorted(
            (r for r in mine if r.state in TERMINAL_STATES and r.slot_start >= cutoff),
            key=lambda r: r.slot_start,
        )
        return active, recent

    def tick(self, now: datetime | None = None) -> list[NotificationEvent]:
        """Advance every reminder due at ``now``; returns newly fired events.

        Each reminder is judged by its state on entry, so a reminder that
        becomes Notified in this tick cannot also expire in it — with a zero
        lead the user still gets the same tick's event and may confirm before
        the next one.
        """
        now = now or self.clock.now()
        fired: list[NotificationEvent] = []
        with self._lock:
            dirty = False
            for reminder in sorted(self._reminders.values(), key=lambda r: r.id):
                if reminder.state is ReminderState.NOTIFIED and reminder.slot_start <= now:
                    self._transition(reminder, ReminderState.EXPIRED, save=False)
                    dirty = True
                elif reminder.state is ReminderState.CONFIRMED and reminder.slot_start <= now:
                    if self._try_start(reminder, now):
                        self._transition(reminder, ReminderState.STARTED, save=False)
                        dirty = True
                elif reminder.state is ReminderState.SCHEDULED and reminder.notify_at <= now:
                    self._transition(reminder, ReminderState.NOTIFIED, save=False)
                    event = NotificationEvent(
                        id=f"e-{self._next_event:04d}",
                        reminder_id=reminder.id,
                        user=reminder.user,
                        fires_at=now,
                    )
                    self._next_event += 1
                    self._events[event.id] = event
                    fired.append(event)
                    dirty = True
            if dirty:
                self._save()
        return fired

    def _try_start(self, reminder: Reminder, now: datetime) -> bool:
        if self.appliance_start is None:
            return True
        try:
            self.appliance_start()
            return True
        except DeviceError as exc:
            # Stay Confirmed; the next tick retries.
            logger.error("auto-start failed for %s: %s", reminder.id, exc)
            self._start_failures.append(StartFailure(reminder.id, now, str(exc)))
            return False

    def _transition(self, reminder: Reminder, new_state: ReminderState, save: bool = True) -> Reminder:
        updated = replace(reminder, state=new_state)
        self._reminders[reminder.id] = updated
        if save:
            self._save()
        return updated

    # -- notification event queue -----------------------------------------

    def poll_events(self, user: str) -> list[NotificationEvent]:
        """Unacknowledged events for one user; redelivered until acked."""
        with self._lock:
            return sorted(
                (e for e in self._events.values() if e.user == user and not e.acknowledged),
                key=lambda e: e.id,
            )

    def ack_event(self, event_id: str, user: str | None = None) -> None:
        with self._lock:
            event = self._events.get(event_id)
            if event is None or (user is not None and event.user != user):
                raise UnknownReminderError(f"no notification event {event_id!r}")
            event.acknowledged = True
            self._save()

    @property
    def start_failures(self) -> list[StartFailure]:
        return list(self._start_failures)
