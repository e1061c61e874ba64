"""Tool descriptors and their server-side execution.

``get_timewindows`` is the canonical schema and is pinned field-for-field by
the acceptance fixtures; the companion tools follow the same descriptor
shape. Execution failures are returned as error payloads, never raised, so
the language model can explain the problem conversationally.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Callable

from .clock import Clock
from .devices import Appliance
from .errors import WashyError
from .forecast import ForecastSeries
from .reminders import ReminderBook
from .scheduler import (
    LaundryRequest,
    best_solar_time,
    quality_of_slot,
    ranked_windows,
    required_energy,
)
from .timeutil import iso_utc, local_str, parse_ts

logger = logging.getLogger(__name__)

TOOL_DESCRIPTORS: list[dict] = [
    {
        "type": "function",
        "function": {
            "name": "get_timewindows",
            "description": "Return the list of time windows for scheduling a laundry cycle, based on the forecasted solar energy production.",
            "parameters": {
                "type": "object",
                "properties": {
                    "power": {
                        "type": "integer",
                        "description": "The power of the laundry machine in watts",
                    },
                    "duration_minutes": {
                        "type": "integer",
                        "description": "The duration of the laundry cycle in minutes",
                    },
                },
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "schedule_notification",
            "description": "Book a laundry slot and schedule its notification a number of minutes before the slot starts.",
            "parameters": {
                "type": "object",
                "properties": {
                    "slot_start_utc": {
                        "type": "string",
                        "description": "Slot start time as an ISO-8601 UTC timestamp",
                    },
                    "duration_minutes": {
                        "type": "integer",
                        "description": "The duration of the laundry cycle in minutes",
                    },
                    "lead_minutes": {
                        "type": "integer",
                        "description": "Minutes before the slot start at which to notify, between 0 and 60",
                    },
                },
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "list_notifications",
            "description": "Return the user's laundry notifications from the database.",
            "parameters": {"type": "object", "properties": {}},
        },
    },
    {
        "type": "function",
        "function": {
            "name": "delete_notification",
            "description": "Delete a laundry notification from the database.",
            "parameters": {
                "type": "object",
                "properties": {
                    "id": {
                        "type": "string",
                        "description": "Identifier of the notification to delete",
                    }
                },
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "confirm_notification",
            "description": "Confirm a notified laundry slot so the washing machine starts automatically at the slot time.",
            "parameters": {
                "type": "object",
                "properties": {
                    "id": {
                        "type": "string",
                        "description": "Identifier of the notification to confirm",
                    }
                },
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "plug_on",
            "description": "Turn the washing machine smart plug on.",
            "parameters": {"type": "object", "properties": {}},
        },
    },
    {
        "type": "function",
        "function": {
            "name": "plug_off",
            "description": "Turn the washing machine smart plug off.",
            "parameters": {"type": "object", "properties": {}},
        },
    },
    {
        "type": "function",
        "function": {
            "name": "best_solar_time",
            "description": "Return the best time for solar energy production and the forecasted production at that time.",
            "parameters": {"type": "object", "properties": {}},
        },
    },
]

TOOL_NAMES = [d["function"]["name"] for d in TOOL_DESCRIPTORS]


def get_descriptor(name: str) -> dict:
    for descriptor in TOOL_DESCRIPTORS:
        if descriptor["function"]["name"] == name:
            return descriptor
    raise KeyError(name)


@dataclass
class ToolRuntime:
    """Everything tool execution needs, bound to one user."""

    user_id: str
    username: str
    timezone: str
    default_power_w: float
    clock: Clock
    forecast_provider: Callable[[datetime], ForecastSeries]
    reminders: ReminderBook
    appliance: Appliance
    step_minutes: int = 15

    def local(self, dt: datetime) -> str:
        return local_str(dt, self.timezone)


def execute_tool(name: str, args: dict, rt: ToolRuntime) -> dict:
    """Run one tool call; any failure becomes an ``{"error": ...}`` payload."""
    handler = _HANDLERS.get(name)
    if handler is None:
        return {"error": {"code": "unknown_tool", "message": f"no tool named {name!r}"}}
    try:
        return handler(args or {}, rt)
    except WashyError as exc:
        return {"error": {"code": exc.code, "message": exc.message}}
    except Exception as exc:  # defensive: a tool bug must not kill the turn
        logger.exception("tool %s failed", name)
        return {"error": {"code": "tool_failed", "message": str(exc)}}


def _window_dict(w, rt: ToolRuntime) -> dict:
    return {
        "start_local": rt.local(w.start),
        "start_utc": iso_utc(w.start),
        "duration_minutes": w.duration_minutes,
        "production_wh": round(w.production_wh, 1),
        "quality": w.quality.value,
        "exceeds_required": w.exceeds_required,
    }


def _get_timewindows(args: dict, rt: ToolRuntime) -> dict:
    power = float(args.get("power") or rt.default_power_w)
    duration = float(args.get("duration_minutes") or 60)
    req = LaundryRequest(power_w=power, duration_minutes=duration)
    now = rt.clock.now()
    ranked = ranked_windows(rt.forecast_provider(now), req, now, rt.step_minutes)
    return {
        "required_wh": round(required_energy(req), 1),
        "windows": [_window_dict(w, rt) for w in ranked.windows],
    }


def _schedule_notification(args: dict, rt: ToolRuntime) -> dict:
    slot_start = parse_ts(str(args["slot_start_utc"]))
    duration = float(args.get("duration_minutes") or 60)
    lead = int(args.get("lead_minutes", 0))
    now = rt.clock.now()
    req = LaundryRequest(power_w=rt.default_power_w, duration_minutes=duration)
    quality = quality_of_slot(rt.forecast_provider(now), req, now, slot_start, rt.step_minutes)
    reminder = rt.reminders.schedule(
        user=rt.user_id,
        slot_start=slot_start,
        duration_minutes=duration,
        lead_minutes=lead,
        quality=quality,
    )
    return _reminder_dict(reminder, rt)


def _reminder_dict(reminder, rt: ToolRuntime) -> dict:
    return {
        "id": reminder.id,
        "slot_start_local": rt.local(reminder.slot_start),
        "slot_start_utc": iso_utc(reminder.slot_start),
        "duration_minutes": reminder.duration_minutes,
        "lead_minutes": reminder.lead_minutes,
        "state": reminder.state.value,
        "quality": reminder.quality_at_booking.value,
    }


def _list_notifications(args: dict, rt: ToolRuntime) -> dict:
    active, recent = rt.reminders.list_for(rt.user_id)
    return {
        "active": [_reminder_dict(r, rt) for r in active],
        "recently_expired": [_reminder_dict(r, rt) for r in recent],
    }


def _delete_notification(args: dict, rt: ToolRuntime) -> dict:
    reminder = rt.reminders.get(str(args["id"]), rt.user_id)
    rt.reminders.delete(reminder.id, rt.user_id)
    return {"deleted": reminder.id, "slot_start_local": rt.local(reminder.slot_start)}


def _confirm_notification(args: dict, rt: ToolRuntime) -> dict:
    reminder = rt.reminders.confirm(str(args["id"]), rt.user_id)
    return _reminder_dict(reminder, rt)


def _plug_on(args: dict, rt: ToolRuntime) -> dict:
    return rt.appliance.plug_on().as_dict()


def _plug_off(args: dict, rt: ToolRuntime) -> dict:
    return rt.appliance.plug_off().as_dict()


def _best_solar_time(args: dict, rt: ToolRuntime) -> dict:
    now = rt.clock.now()
    peak_at, watts = best_solar_time(rt.forecast_provider(now), now)
    return {
        "time_local": rt.local(peak_at),
        "time_utc": iso_utc(peak_at),
        "watts": round(watts, 1),
    }


_HANDLERS: dict[str, Callable[[dict, ToolRuntime], dict]] = {
    "get_timewindows": _get_timewindows,
    "schedule_notification": _schedule_notification,
    "list_notifications": _list_notifications,
    "delete_notification": _delete_notification,
    "confirm_notification": _confirm_notification,
    "plug_on": _plug_on,
    "plug_off": _plug_off,
    "best_solar_time": _best_solar_time,
}
