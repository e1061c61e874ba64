"""Scripted conversation replays against the deterministic mock backend.

A script is a JSON document with a virtual-clock start, a forecast profile,
one user, and a list of steps. ``say`` steps run an agent turn and assert the
observed tool calls and reply class; directive steps advance the clock, tick
reminders, or assert reminder/device state. The same script serves both
personas: steps may be persona-gated and expectations may differ per persona.

Time placeholders inside user text and expected arguments:

    {local_hm+N}   local HH:MM of (now + N minutes)
    {utc_iso+N}    ISO UTC of (now + N minutes)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

from .agent import ChatSession, run_turn
from .clock import VirtualClock
from .devices import Appliance, SimulatedPlug
from .errors import ValidationError
from .forecast import DAY_PROFILES, synth_forecast
from .mock_backend import ConversationPolicy, MockBackend
from .prompts import PersonaKind
from .reminders import ReminderBook
from .timeutil import iso_utc, local_str, parse_ts, resolve_tz
from .tools import ToolRuntime

_PLACEHOLDER = re.compile(r"\{(local_hm|utc_iso)\+(\d+)\}")


@dataclass
class ReplayReport:
    persona: PersonaKind
    lines: list[str] = field(default_factory=list)
    mismatches: int = 0

    @property
    def ok(self) -> bool:
        return self.mismatches == 0

    def text(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        summary = f"{verdict} persona={self.persona.value} steps={len(self.lines)} mismatches={self.mismatches}"
        return "\n".join(self.lines + [summary])


def load_script(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"replay script not found: {path}")
    try:
        script = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"replay script {path} is not valid JSON: {exc}") from exc
    if not isinstance(script, dict) or "steps" not in script:
        raise ValidationError(f"replay script {path} must be an object with a 'steps' list")
    return script


def run_replay(script: dict, persona: PersonaKind) -> ReplayReport:
    clock = VirtualClock(parse_ts(script["start_utc"]))
    tz_name = script.get("timezone", "UTC")
    tz = resolve_tz(tz_name)

    forecast_cfg = script.get("forecast") or {}
    if "profile" in forecast_cfg:
        profile = DAY_PROFILES[forecast_cfg["profile"]]
    else:
        profile = [(float(h), float(w)) for h, w in forecast_cfg["day_profile"]]
    days = int(forecast_cfg.get("days", 3))

    appliance = Appliance(
        SimulatedPlug(),
        clock,
        program_latched=bool((script.get("setup") or {}).get("latch_program", False)),
    )
    book = ReminderBook(clock=clock, path=None, appliance_start=appliance.start_cycle)
    backend = MockBackend(ConversationPolicy(persona=persona))
    rt = ToolRuntime(
        user_id=script.get("user_id", "user"),
        username=script.get("username", "User"),
        timezone=tz_name,
        default_power_w=float(script.get("default_power_w", 2000.0)),
        clock=clock,
        forecast_provider=lambda now: synth_forecast(profile, days, now),
        reminders=book,
        appliance=appliance,
        step_minutes=int(script.get("step_minutes", 15)),
    )
    session = ChatSession(
        user_id=rt.user_id, persona=persona, timezone=tz_name, username=rt.username
    )

    report = ReplayReport(persona=persona)
    for step in script["steps"]:
        only = step.get("only_persona")
        if only is not None and PersonaKind(only) is not persona:
            continue
        _run_step(step, persona, clock, tz, rt, session, backend, book, appliance, report)
    return report


def _run_step(step, persona, clock, tz, rt, session, backend, book, appliance, report):
    problems: list[str] = []
    now = clock.now()

    if "say" in step:
        text = _resolve(step["say"], now, tz)
        result = run_turn(session, text, backend, rt)
        observed_tools = [(c.name, c.arguments) for c in result.tool_calls]
        desc = (
            f'say "{text}" -> class={result.meta.get("class")} '
            f"tools={','.join(n for n, _ in observed_tools) or '-'}"
        )
        expected_class = _per_persona(step.get("expect_class"), persona)
        if expected_class is not None and result.meta.get("class") != expected_class:
            problems.append(f"expected class={expected_class}, got {result.meta.get('class')}")
        expected_sentiment = _per_persona(step.get("expect_sentiment"), persona)
        if expected_sentiment is not None and result.meta.get("sentiment") != expected_sentiment:
            problems.append(
                f"expected sentiment={expected_sentiment}, got {result.meta.get('sentiment')}"
            )
        expected_tools = _per_persona(step.get("expect_tools"), persona)
        if expected_tools is not None:
            problems.extend(_check_tools(expected_tools, observed_tools, now, tz))
    elif "advance_minutes" in step:
        fired = 0
        for _ in range(int(step["advance_minutes"])):
            clock.advance(timedelta(minutes=1))
            fired += len(book.tick())
        desc = f"advance {step['advance_minutes']}m -> events={fired}"
        problems.extend(_check_events(step, fired, book, rt.user_id))
    elif step.get("tick"):
        fired = len(book.tick())
        desc = f"tick -> events={fired}"
        problems.extend(_check_events(step, fired, book, rt.user_id))
    elif "latch_program" in step:
        if step["latch_program"]:
            appliance.latch_program()
        desc = "latch program"
    elif "expect_device" in step or "expect_reminders" in step:
        desc = "assert state"
    else:
        desc = f"unknown step {sorted(step)}"
        problems.append("unrecognized step directive")

    if "expect_device" in step:
        status = appliance.status()
        for key, want in step["expect_device"].items():
            got = getattr(status, key)
            if got != want:
                problems.append(f"device.{key}: expected {want}, got {got}")
        desc += f" device(running={status.running},plug_on={status.plug_on})"
    if "expect_reminders" in step:
        for reminder_id, want in step["expect_reminders"].items():
            try:
                got = book.get(reminder_id).state.value
            except Exception:
                got = "<missing>"
            if got != want:
                problems.append(f"reminder {reminder_id}: expected {want}, got {got}")
        desc += " reminders(" + ",".join(
            f"{rid}={want}" for rid, want in step["expect_reminders"].items()
        ) + ")"

    index = len(report.lines) + 1
    if problems:
        report.mismatches += 1
        report.lines.append(f"FAIL step {index:02d} {desc} | " + "; ".join(problems))
    else:
        report.lines.append(f"ok   step {index:02d} {desc}")


def _check_events(step, fired: int, book, user_id: str) -> list[str]:
    problems = []
    if "expect_events" in step and fired != int(step["expect_events"]):
        problems.append(f"expected {step['expect_events']} fired events, got {fired}")
    if "expect_pending" in step:
        pending = len(book.poll_events(user_id))
        if pending != int(step["expect_pending"]):
            problems.append(f"expected {step['expect_pending']} pending events, got {pending}")
    return problems


def _check_tools(expected, observed, now, tz) -> list[str]:
    problems = []
    expected_names = [e["name"] if isinstance(e, dict) else e for e in expected]
    observed_names = [name for name, _ in observed]
    if expected_names != observed_names:
        problems.append(f"expected tools {expected_names}, got {observed_names}")
        return problems
    for spec, (_, args) in zip(expected, observed):
        if not isinstance(spec, dict):
            continue
        for key, want in _resolve_obj(spec.get("args", {}), now, tz).items():
            if key not in args:
                problems.append(f"{spec['name']}: missing argument {key}")
            elif args[key] != want:
                problems.append(f"{spec['name']}.{key}: expected {want!r}, got {args[key]!r}")
    return problems


def _per_persona(value, persona: PersonaKind):
    if isinstance(value, dict) and ("traditional" in value or "personified" in value):
        return value.get(persona.value)
    return value


def _resolve(text: str, now, tz) -> str:
    def sub(match: re.Match) -> str:
        kind, minutes = match.group(1), int(match.group(2))
        instant = now + timedelta(minutes=minutes)
        if kind == "local_hm":
            return local_str(instant, tz, "%H:%M")
        return iso_utc(instant)

    return _PLACEHOLDER.sub(sub, text)


def _resolve_obj(obj, now, tz):
    if isinstance(obj, dict):
        return {k: _resolve_obj(v, now, tz) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_resolve_obj(v, now, tz) for v in obj]
    if isinstance(obj, str):
        return _resolve(obj, now, tz)
    return obj
