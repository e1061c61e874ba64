"""Deterministic stand-in for the remote language model.

The mock drives the same conversation blueprint the live agent is prompted
with: a scheduling request triggers a window lookup; booking a good slot
earns a compliment; a bad or average choice gets a counter-suggestion naming
the best window; if the user keeps insisting the notification is set anyway
and the reply carries a regret marker. The personified policy holds out for
one extra insistence and colours its replies with a sentiment tag.

Replies carry machine-readable metadata (``class`` and ``sentiment``) so
blueprint conformance is assertable without parsing natural language.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .agent import Backend, BackendReply, BackendRequest, ToolCall
from .errors import ValidationError
from .prompts import PersonaKind
from .timeutil import UTC, iso_utc, parse_ts, resolve_tz

DEFAULT_LEAD_MINUTES = 10


@dataclass(frozen=True)
class ConversationPolicy:
    """Knobs distinguishing the two agent flavours."""

    persona: PersonaKind
    default_lead_minutes: int = DEFAULT_LEAD_MINUTES

    @property
    def insist_threshold(self) -> int:
        # The personified appliance is more reluctant: it yields only after
        # the user insists a second time.
        return 2 if self.persona is PersonaKind.PERSONIFIED else 1


@dataclass
class _Pending:
    """A non-optimal slot the user asked for and was talked back from."""

    slot_utc: str
    power: float
    duration: float
    quality: str
    production_wh: float
    exceeds: bool
    best_local: str
    best_wh: float


@dataclass
class _SessionState:
    last_power: float | None = None
    last_duration: float | None = None
    pending: _Pending | None = None
    insist_count: int = 0
    plan: dict | None = None
    call_seq: int = 0


_TIME_HM = re.compile(r"\bat\s+(\d{1,2}):(\d{2})\b")
_TIME_AMPM = re.compile(r"\b(?:at\s+)?(\d{1,2})\s*(am|pm)\b")
_TIME_IN_MIN = re.compile(r"\bin\s+(\d+)\s*min(?:ute)?s?\b")
_POWER = re.compile(r"\b(\d+(?:\.\d+)?)\s*(?:w|watts?)\b")
_DUR_HOURS = re.compile(r"\b(\d+(?:\.\d+)?)\s*h(?:ours?|rs?)?\b")
_DUR_MINUTES = re.compile(r"\b(\d+)\s*min(?:ute)?s?\b")
_LEAD = re.compile(r"\b(\d+)\s*min(?:ute)?s?\s+(?:before|early|in advance)\b")
_DAYS_AHEAD = re.compile(r"\b(\d+)\s*days?\b")

_INSIST = re.compile(
    r"\binsist\b|\banyway\b|i'?m sure|really (?:do )?want|please just|go ahead|just (?:do|set|book|schedule)"
)
_CAPABILITIES = re.compile(
    r"who are you|what can you do|what are you|your capabilities|introduce yourself|what do you do"
)
_EXPLAIN = re.compile(r"how (?:do|can) you .*(forecast|predict|know|provide)")
_PLUG_OFF = re.compile(r"\b(stop|turn off|switch off|power off)\b")
_PLUG_ON = re.compile(r"\b(turn on|switch on|power on)\b")
_SOLAR_BEST = re.compile(r"best time for solar|solar (?:energy )?production|production peak")
_LIST = re.compile(
    r"(?:show|list|check|see|view|what are).{0,40}(?:notification|reminder|booking|slot)s?"
    r"|my notifications|upcoming notifications"
)
_DELETE = re.compile(r"\b(delete|remove)\b")
_CONFIRM = re.compile(r"\bconfirm\b")
_SCHEDULE = re.compile(r"\b(schedule|book|reserve|set|plan|wash|laundry|cycle)\w*\b")
_SCHEDULE_BEST = re.compile(r"\bbest\b.*\b(time|slot|window)\b|\b(time|slot|window)\b.*\bbest\b")
_SCHEDULE_VERB = re.compile(r"\b(schedule|book|set|reserve|use|take|go with)\b")
_RECOMMEND_Q = re.compile(r"\bwhen\b|\bwhat time\b|\bbest\b|\bsuggest\b|\brecommend\b")

_SYS_TZ = re.compile(r"timezone is (\S+)\.")
_SYS_NOW = re.compile(r"Today's datetime is (.+?) UTC\.")


class MockBackend(Backend):
    """Offline, deterministic conversation policy behind the backend seam."""

    def __init__(self, policy: ConversationPolicy):
        self.policy = policy
        self._sessions: dict[str, _SessionState] = {}

    # -- entry point --------------------------------------------------------

    def complete(self, request: BackendRequest) -> BackendReply:
        state = self._sessions.setdefault(request.session_id, _SessionState())
        # Like the live model, the mock reads the user's timezone and the
        # current instant out of its own system prompt.
        tz_match = _SYS_TZ.search(request.system_prompt)
        now_match = _SYS_NOW.search(request.system_prompt)
        if tz_match is None or now_match is None:
            raise ValidationError("mock backend requires the standard system prompt")
        tz_name = tz_match.group(1)
        now = parse_ts(now_match.group(1))
        tz = resolve_tz(tz_name)

        last = request.messages[-1]
        if last.get("role") == "tool":
            if state.plan is None:
                return self._text("clarify", self._t_clarify())
            return self._resume(state, last, tz, now)
        return self._new_turn(state, str(last.get("content") or ""), tz, now)

    # -- reply helpers -------------------------------------------------------

    def _text(self, reply_class: str, text: str, sentiment: str | None = None) -> BackendReply:
        if sentiment is None:
            sentiment = "neutral"
        return BackendReply(
            text=text,
            meta={
                "class": reply_class,
                "sentiment": sentiment,
                "persona": self.policy.persona.value,
            },
        )

    def _call(self, state: _SessionState, name: str, arguments: dict) -> BackendReply:
        state.call_seq += 1
        return BackendReply(tool_calls=[ToolCall(id=f"call-{state.call_seq}", name=name, arguments=arguments)])

    @property
    def _personified(self) -> bool:
        return self.policy.persona is PersonaKind.PERSONIFIED

    # -- turn handling -------------------------------------------------------

    def _new_turn(self, state: _SessionState, text: str, tz, now: datetime) -> BackendReply:
        state.plan = None
        lowered = text.lower()

        if state.pending is not None and _INSIST.search(lowered):
            return self._handle_insist(state)

        days = [int(m) for m in _DAYS_AHEAD.findall(lowered)]
        if any(d > 3 for d in days) or "next week" in lowered:
            return self._text("refusal", self._t_refusal())

        if _CAPABILITIES.search(lowered):
            return self._text("capabilities", self._t_capabilities())
        if _EXPLAIN.search(lowered):
            return self._text("explain", self._t_explain())

        if _PLUG_OFF.search(lowered) and ("machine" in lowered or "plug" in lowered or "washing" in lowered):
            state.plan = {"kind": "plug", "direction": "off"}
            return self._call(state, "plug_off", {})
        if _PLUG_ON.search(lowered) and ("machine" in lowered or "plug" in lowered or "washing" in lowered):
            state.plan = {"kind": "plug", "direction": "on"}
            return self._call(state, "plug_on", {})

        if _SOLAR_BEST.search(lowered):
            state.plan = {"kind": "solar"}
            return self._call(state, "best_solar_time", {})

        if _DELETE.search(lowered) and "notification" in lowered:
            state.plan = {"kind": "delete", "stage": "list", "time": self._local_hm(lowered)}
            return self._call(state, "list_notifications", {})

        if _CONFIRM.search(lowered):
            state.plan = {"kind": "confirm", "stage": "list"}
            return self._call(state, "list_notifications", {})

        if _LIST.search(lowered):
            state.plan = {"kind": "list"}
            return self._call(state, "list_notifications", {})

        if _SCHEDULE.search(lowered) or _RECOMMEND_Q.search(lowered):
            return self._handle_schedule(state, lowered, tz, now)

        return self._text("clarify", self._t_clarify())

    def _handle_schedule(self, state: _SessionState, lowered: str, tz, now: datetime) -> BackendReply:
        slot_utc, remainder = self._parse_time(lowered, tz, now)
        power, remainder = self._parse_power(remainder, state)
        duration, _ = self._parse_duration(remainder, state)
        lead = self._parse_lead(lowered)
        state.last_power = power
        state.last_duration = duration

        wants_best = _SCHEDULE_BEST.search(lowered) and _SCHEDULE_VERB.search(lowered)
        args = {"power": int(power), "duration_minutes": int(duration)}
        if wants_best:
            state.plan = {"kind": "schedule_best", "power": power, "duration": duration, "lead": lead, "now": now}
            return self._call(state, "get_timewindows", args)
        if slot_utc is not None:
            state.plan = {
                "kind": "schedule_at",
                "slot_utc": slot_utc,
                "power": power,
                "duration": duration,
                "lead": lead,
                "now": now,
            }
            return self._call(state, "get_timewindows", args)
        state.plan = {"kind": "recommend"}
        return self._call(state, "get_timewindows", args)

    def _handle_insist(self, state: _SessionState) -> BackendReply:
        state.insist_count += 1
        pending = state.pending
        if state.insist_count < self.policy.insist_threshold:
            return self._text(
                "counter-suggest",
                self._t_counter(pending, repeat=True),
                sentiment="anxious" if self._personified else "neutral",
            )
        state.plan = {"kind": "schedule_pending"}
        return self._call(
            state,
            "schedule_notification",
            {
                "slot_start_utc": pending.slot_utc,
                "duration_minutes": int(pending.duration),
                "lead_minutes": self.policy.default_lead_minutes,
            },
        )

    # -- plan resumption (tool results) ---------------------------------------

    def _resume(self, state: _SessionState, tool_msg: dict, tz, now: datetime) -> BackendReply:
        plan = state.plan
        result = json.loads(tool_msg.get("content") or "{}")
        if "error" in result:
            state.plan = None
            return self._text("error", f"Something went wrong: {result['error']['message']}")

        kind = plan["kind"]
        if kind == "recommend":
            state.plan = None
            best = result["windows"][0]
            return self._text(
                "recommend",
                self._t_recommend(best),
                sentiment="joyful" if self._personified else "neutral",
            )

        if kind == "schedule_best":
            if plan.get("stage") != "booked":
                best = result["windows"][0]
                plan["window"] = best
                plan["stage"] = "booked"
                lead = self._clamped_lead(plan["lead"], best["start_utc"], plan["now"])
                return self._call(
                    state,
                    "schedule_notification",
                    {
                        "slot_start_utc": best["start_utc"],
                        "duration_minutes": int(plan["duration"]),
                        "lead_minutes": lead,
                    },
                )
            window = plan["window"]
            state.plan = None
            state.pending = None
            state.insist_count = 0
            return self._text(
                "compliment",
                self._t_compliment(window),
                sentiment="joyful" if self._personified else "neutral",
            )

        if kind == "schedule_at":
            if plan.get("stage") != "booked":
                window = self._find_window(result["windows"], plan["slot_utc"])
                plan["window"] = window
                if window["quality"] == "Good":
                    plan["stage"] = "booked"
                    lead = self._clamped_lead(plan["lead"], plan["slot_utc"], plan["now"])
                    return self._call(
                        state,
                        "schedule_notification",
                        {
                            "slot_start_utc": plan["slot_utc"],
                            "duration_minutes": int(plan["duration"]),
                            "lead_minutes": lead,
                        },
                    )
                best = result["windows"][0]
                state.pending = _Pending(
                    slot_utc=plan["slot_utc"],
                    power=plan["power"],
                    duration=plan["duration"],
                    quality=window["quality"],
                    production_wh=window["production_wh"],
                    exceeds=window["exceeds_required"],
                    best_local=best["start_local"],
                    best_wh=best["production_wh"],
                )
                state.insist_count = 0
                state.plan = None
                return self._text(
                    "counter-suggest",
                    self._t_counter(state.pending, repeat=False, slot_local=window["start_local"]),
                    sentiment="anxious" if self._personified else "neutral",
                )
            window = plan["window"]
            state.plan = None
            state.pending = None
            state.insist_count = 0
            return self._text(
                "compliment",
                self._t_compliment(window),
                sentiment="joyful" if self._personified else "neutral",
            )

        if kind == "schedule_pending":
            booked = result
            pending = state.pending
            state.plan = None
            state.pending = None
            state.insist_count = 0
            return self._text(
                "regret",
                self._t_regret(booked["slot_start_local"], pending),
                sentiment="anxious" if self._personified else "neutral",
            )

        if kind == "list":
            state.plan = None
            return self._text("list", self._t_list(result["active"]))

        if kind == "confirm":
            if plan["stage"] == "list":
                notified = [r for r in result["active"] if r["state"] == "Notified"]
                if not notified:
                    state.plan = None
                    return self._text("clarify", "There is no notified laundry slot waiting for confirmation.")
                plan["stage"] = "confirm"
                plan["slot_local"] = notified[0]["slot_start_local"]
                return self._call(state, "confirm_notification", {"id": notified[0]["id"]})
            state.plan = None
            return self._text(
                "confirm",
                self._t_confirm(plan["slot_local"]),
                sentiment="joyful" if self._personified else "neutral",
            )

        if kind == "delete":
            if plan["stage"] == "list":
                target = self._pick_for_delete(result["active"], plan.get("time"))
                if target is None:
                    state.plan = None
                    return self._text("clarify", "I could not find a matching notification to delete.")
                plan["stage"] = "delete"
                plan["slot_local"] = target["slot_start_local"]
                return self._call(state, "delete_notification", {"id": target["id"]})
            state.plan = None
            return self._text("delete", f"Done, I have deleted the notification for **{plan['slot_local']}**.")

        if kind == "plug":
            state.plan = None
            return self._text("device", self._t_device(result, plan["direction"]))

        if kind == "solar":
            state.plan = None
            return self._text(
                "solar",
                f"Solar production peaks at **{result['time_local']}** with a forecast of about {result['watts']:g} W.",
            )

        state.plan = None
        return self._text("clarify", self._t_clarify())

    # -- parsing --------------------------------------------------------------

    def _parse_time(self, lowered: str, tz, now: datetime) -> tuple[str | None, str]:
        m = _TIME_IN_MIN.search(lowered)
        if m:
            slot = now + timedelta(minutes=int(m.group(1)))
            return iso_utc(slot), _cut(lowered, m.span())
        m = _TIME_HM.search(lowered)
        if m:
            hour, minute = int(m.group(1)), int(m.group(2))
            return iso_utc(self._next_local(hour, minute, tz, now)), _cut(lowered, m.span())
        m = _TIME_AMPM.search(lowered)
        if m:
            hour = int(m.group(1)) % 12
            if m.group(2) == "pm":
                hour += 12
            return iso_utc(self._next_local(hour, 0, tz, now)), _cut(lowered, m.span())
        return None, lowered

    @staticmethod
    def _next_local(hour: int, minute: int, tz, now: datetime) -> datetime:
        local_now = now.astimezone(tz)
        candidate = local_now.replace(hour=hour, minute=minute, second=0, microsecond=0)
        if candidate <= local_now:
            candidate += timedelta(days=1)
        return candidate.astimezone(UTC)

    def _parse_power(self, lowered: str, state: _SessionState) -> tuple[float, str]:
        m = _POWER.search(lowered)
        if m:
            return float(m.group(1)), _cut(lowered, m.span())
        if state.last_power is not None:
            return state.last_power, lowered
        return 0.0, lowered  # 0 -> server substitutes the appliance default

    def _parse_duration(self, lowered: str, state: _SessionState) -> tuple[float, str]:
        m = _DUR_HOURS.search(lowered)
        if m:
            return float(m.group(1)) * 60.0, _cut(lowered, m.span())
        m = _DUR_MINUTES.search(lowered)
        if m:
            return float(m.group(1)), _cut(lowered, m.span())
        if state.last_duration is not None:
            return state.last_duration, lowered
        return 60.0, lowered

    def _parse_lead(self, lowered: str) -> int:
        m = _LEAD.search(lowered)
        return int(m.group(1)) if m else self.policy.default_lead_minutes

    @staticmethod
    def _local_hm(lowered: str) -> str | None:
        m = _TIME_HM.search(lowered)
        return f"{int(m.group(1)):02d}:{int(m.group(2)):02d}" if m else None

    @staticmethod
    def _clamped_lead(lead: int, slot_utc: str, now: datetime) -> int:
        # A notification can never be scheduled in the past: shrink the lead
        # when the slot is closer than the requested head start.
        available = int((parse_ts(slot_utc) - now).total_seconds() // 60)
        return max(0, min(lead, available))

    @staticmethod
    def _find_window(windows: list[dict], slot_utc: str) -> dict:
        for w in windows:
            if w["start_utc"] == slot_utc:
                return w
        target = parse_ts(slot_utc)
        return min(windows, key=lambda w: abs((parse_ts(w["start_utc"]) - target).total_seconds()))

    @staticmethod
    def _pick_for_delete(active: list[dict], hm: str | None) -> dict | None:
        if hm is not None:
            for r in active:
                if r["slot_start_local"].endswith(hm):
                    return r
            return None
        return active[0] if active else None

    # -- reply texts ------------------------------------------------------------

    @staticmethod
    def _exceeds_phrase(exceeds: bool) -> str:
        return "it exceeds the required energy" if exceeds else "it does not cover the required energy"

    def _t_recommend(self, best: dict) -> str:
        base = (
            f"The best time window is **{best['start_local']}**, producing about "
            f"{best['production_wh']:g} Wh. That is a good slot and {self._exceeds_phrase(best['exceeds_required'])}."
        )
        if self._personified:
            return base + " I would love to run then! 😊"
        return base

    def _t_compliment(self, window: dict) -> str:
        base = (
            f"Great choice! **{window['start_local']}** is a good slot "
            f"({window['production_wh']:g} Wh, {self._exceeds_phrase(window['exceeds_required'])}). "
            "Your laundry notification is set."
        )
        if self._personified:
            return "Yay! 🎉 " + base + " Thank you for listening to me!"
        return base

    def _t_counter(self, pending: _Pending, repeat: bool, slot_local: str | None = None) -> str:
        quality = pending.quality.lower()
        opening = "I still think that is not a good idea." if repeat else ""
        slot_part = f"**{slot_local}**" if slot_local else "That time"
        base = (
            f"{opening} {slot_part} looks like a {quality} slot "
            f"({pending.production_wh:g} Wh, {self._exceeds_phrase(pending.exceeds)}). "
            f"A better time would be **{pending.best_local}** with about {pending.best_wh:g} Wh. "
            "Shall I book that instead?"
        ).strip()
        if self._personified:
            return "Oh no... 😰 " + base
        return base

    def _t_regret(self, slot_local: str, pending: _Pending) -> str:
        quality = pending.quality.lower()
        base = (
            f"Alright, I have set the notification for **{slot_local}** even though it is a "
            f"{quality} slot ({pending.production_wh:g} Wh, {self._exceeds_phrase(pending.exceeds)})."
        )
        if self._personified:
            return base + " This really stresses me out... 😔"
        return base + " I would still recommend a sunnier time."

    @staticmethod
    def _t_list(active: list[dict]) -> str:
        if not active:
            return "You have no upcoming laundry notifications."
        lines = "\n".join(f"- {r['slot_start_local']}" for r in active)
        return "Here are your upcoming laundry notifications:\n" + lines

    def _t_confirm(self, slot_local: str) -> str:
        base = f"Confirmed! Your laundry at **{slot_local}** will start automatically."
        if self._personified:
            return base + " I will be ready! 😊"
        return base

    def _t_device(self, result: dict, direction: str) -> str:
        if direction == "off":
            base = "The smart plug is off and the washing machine has stopped."
        elif result.get("running"):
            base = "The smart plug is on and the washing machine is running."
        else:
            base = "The smart plug is on."
        if self._personified:
            return base + " 🫧"
        return base

    def _t_capabilities(self) -> str:
        if self._personified:
            return (
                "I am Washy, your washing machine! 🫧 I watch your solar forecast, suggest the "
                "sunniest laundry times, schedule and manage your notifications, and I can "
                "switch my own smart plug."
            )
        return (
            "I am a friendly assistant for your washing machine and energy use. I can suggest "
            "the best laundry times from your solar production forecast, schedule "
            "notifications, list or delete them, and control the smart plug."
        )

    def _t_explain(self) -> str:
        return (
            "I call an external service that forecasts your solar production for your "
            "location, then compare the energy produced in each possible time window with "
            "what your cycle needs. I can also set notifications and turn the smart plug on "
            "remotely at the best time."
        )

    @staticmethod
    def _t_refusal() -> str:
        return (
            "I cannot know forecast data later than 3 days from now, so I cannot provide "
            "that. Ask me about the next three days instead."
        )

    @staticmethod
    def _t_clarify() -> str:
        return (
            "Tell me how long your laundry cycle should run (for example 'for 1 hour'), and "
            "optionally a time, and I will find the sunniest slot."
        )


def _cut(text: str, span: tuple[int, int]) -> str:
    return text[: span[0]] + " " + text[span[1] :]
