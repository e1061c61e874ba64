"""HTTP facade binding forecast, scheduler, reminders, devices and the agent.

One authenticated multi-user application: static bearer tokens, JSON stores
under the data directory, a background reminder tick (wall clock) or an
admin-stepped virtual clock (tests and replays). All error responses share
the ``{code, message, detail}`` envelope.
"""

from __future__ import annotations

import logging
import threading
from contextlib import asynccontextmanager
from datetime import datetime, timedelta

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .agent import Backend, ChatSession, RemoteBackend, run_turn
from .clock import Clock, VirtualClock, WallClock
from .config import AppConfig, UserAccount
from .devices import Appliance, HttpPlug, SimulatedPlug
from .errors import (
    LeadRangeError,
    PastSlotError,
    TemplateError,
    TransitionError,
    UnknownReminderError,
    ValidationError,
    WashyError,
)
from .forecast import (
    DAY_PROFILES,
    ForecastSeries,
    clamp_series,
    fetch_forecast,
    load_forecast_file,
    synth_forecast,
)
from .mock_backend import ConversationPolicy, MockBackend
from .prompts import PersonaKind
from .reminders import Reminder, ReminderBook
from .storage import JsonStore
from .timeutil import iso_utc, local_str
from .tools import ToolRuntime

logger = logging.getLogger(__name__)

_STATUS_BY_ERROR = {
    UnknownReminderError: 404,
    TransitionError: 409,
    ValidationError: 422,
    PastSlotError: 422,
    LeadRangeError: 422,
    TemplateError: 422,
}


class ChatBody(BaseModel):
    message: str


class StepBody(BaseModel):
    seconds: int


class ServiceState:
    """Everything the endpoints need, wired once per process."""

    def __init__(self, cfg: AppConfig):
        self.cfg = cfg
        self.clock: Clock
        if cfg.clock_mode == "virtual":
            from .timeutil import parse_ts

            self.clock = VirtualClock(parse_ts(cfg.clock_start))
        else:
            self.clock = WallClock()

        cfg.data_dir.mkdir(parents=True, exist_ok=True)
        if cfg.plug_driver == "http":
            driver = HttpPlug(
                on_url=cfg.plug_urls["on_url"],
                off_url=cfg.plug_urls["off_url"],
                status_url=cfg.plug_urls["status_url"],
                status_field=cfg.plug_urls.get("status_field", "ison"),
            )
        else:
            driver = SimulatedPlug()
        self.appliance = Appliance(driver, self.clock, program_latched=cfg.plug_latched_at_start)
        self.reminders = ReminderBook(
            clock=self.clock,
            path=cfg.data_dir / "reminders.json",
            appliance_start=self.appliance.start_cycle,
        )
        self._sessions_store = JsonStore(cfg.data_dir / "sessions.json")
        self._sessions: dict[str, ChatSession] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._sessions_write_lock = threading.Lock()
        self._load_sessions()

        self._fixture_series: ForecastSeries | None = None
        if cfg.forecast_source == "file":
            self._fixture_series = load_forecast_file(cfg.forecast_fixture)

        if cfg.llm_backend == "remote":
            remote = RemoteBackend(url=cfg.llm_url, model=cfg.llm_model, api_key=cfg.llm_key or "")
            self._backends: dict[PersonaKind, Backend] = {k: remote for k in PersonaKind}
        else:
            self._backends = {
                kind: MockBackend(ConversationPolicy(persona=kind)) for kind in PersonaKind
            }

        self._tick_thread: threading.Thread | None = None
        self._stop = threading.Event()

    # -- sessions ----------------------------------------------------------

    def _load_sessions(self) -> None:
        doc = self._sessions_store.read(default={})
        for user_id, entry in doc.items():
            account = self._account_by_id(user_id)
            if account is None:
                continue
            self._sessions[user_id] = ChatSession(
                user_id=user_id,
                persona=account.persona,
                timezone=account.timezone,
                username=account.display_name,
                history=entry.get("messages", []),
            )

    def _save_sessions(self) -> None:
        # Distinct users chat concurrently; serialize whole-document writes.
        with self._sessions_write_lock:
            self._sessions_store.write(
                {
                    user_id: {"persona": s.persona.value, "messages": list(s.history)}
                    for user_id, s in self._sessions.items()
                }
            )

    def session_for(self, account: UserAccount) -> ChatSession:
        session = self._sessions.get(account.id)
        if session is None:
            session = ChatSession(
                user_id=account.id,
                persona=account.persona,
                timezone=account.timezone,
                username=account.display_name,
            )
            self._sessions[account.id] = session
        return session

    def session_lock(self, user_id: str) -> threading.Lock:
        return self._session_locks.setdefault(user_id, threading.Lock())

    def _account_by_id(self, user_id: str) -> UserAccount | None:
        for user in self.cfg.users:
            if user.id == user_id:
                return user
        return None

    # -- forecast ----------------------------------------------------------

    def forecast_for(self, now: datetime, account: UserAccount | None = None) -> ForecastSeries:
        cfg = self.cfg
        if cfg.forecast_source == "file":
            return clamp_series(self._fixture_series, now)
        if cfg.forecast_source == "remote":
            panel = (account.panel if account else None) or cfg.panel
            return fetch_forecast(panel, cfg.forecast_endpoint, now)
        profile = DAY_PROFILES[cfg.forecast_profile]
        return synth_forecast(profile, cfg.forecast_days, now)

    def runtime_for(self, account: UserAccount) -> ToolRuntime:
        return ToolRuntime(
            user_id=account.id,
            username=account.display_name,
            timezone=account.timezone,
            default_power_w=account.default_power_w,
            clock=self.clock,
            forecast_provider=lambda now: self.forecast_for(now, account),
            reminders=self.reminders,
            appliance=self.appliance,
            step_minutes=self.cfg.step_minutes,
        )

    def backend_for(self, account: UserAccount) -> Backend:
        return self._backends[account.persona]

    # -- background tick ----------------------------------------------------

    def start_tick_loop(self) -> None:
        if self.cfg.clock_mode != "wall":
            return

        def loop():
            while not self._stop.wait(self.cfg.tick_seconds):
                try:
                    self.reminders.tick()
                except Exception:
                    logger.exception("reminder tick failed")

        self._tick_thread = threading.Thread(target=loop, name="washy-tick", daemon=True)
        self._tick_thread.start()

    def stop_tick_loop(self) -> None:
        self._stop.set()
        if self._tick_thread is not None:
            self._tick_thread.join(timeout=2.0)

    def step_clock(self, seconds: int) -> tuple[datetime, int]:
        """Advance the virtual clock, ticking at most once a minute."""
        if not isinstance(self.clock, VirtualClock):
            raise TransitionError("clock stepping requires virtual clock mode", "wall")
        if seconds < 0:
            raise ValidationError("cannot step the clock backwards")
        fired = 0
        remaining = seconds
        while remaining > 0:
            chunk = min(60, remaining)
            self.clock.advance(timedelta(seconds=chunk))
            fired += len(self.reminders.tick())
            remaining -= chunk
        if seconds == 0:
            fired += len(self.reminders.tick())
        return self.clock.now(), fired


def _reminder_payload(reminder: Reminder, tz: str) -> dict:
    return {
        "id": reminder.id,
        "slot_start_utc": iso_utc(reminder.slot_start),
        "slot_start_local": local_str(reminder.slot_start, tz),
        "duration_minutes": reminder.duration_minutes,
        "lead_minutes": reminder.lead_minutes,
        "state": reminder.state.value,
        "quality": reminder.quality_at_booking.value,
    }


def create_app(cfg: AppConfig, state: ServiceState | None = None) -> FastAPI:
    state = state or ServiceState(cfg)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state.start_tick_loop()
        yield
        state.stop_tick_loop()

    app = FastAPI(title="washy", lifespan=lifespan)
    app.state.service = state

    def auth(request: Request) -> UserAccount:
        header = request.headers.get("Authorization", "")
        token = header.removeprefix("Bearer ").strip()
        account = cfg.user_by_token(token) if token else None
        if account is None:
            raise _HttpEnvelope(401, "unauthorized", "unknown or missing bearer token")
        return account

    @app.exception_handler(WashyError)
    async def washy_error_handler(request: Request, exc: WashyError):
        status = _STATUS_BY_ERROR.get(type(exc), 500)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(_HttpEnvelope)
    async def envelope_handler(request: Request, exc: "_HttpEnvelope"):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": None},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "invalid_request", "message": "request body is invalid", "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "now": iso_utc(state.clock.now())}

    @app.get("/account")
    def account(user: UserAccount = Depends(auth)):
        return {
            "id": user.id,
            "display_name": user.display_name,
            "timezone": user.timezone,
            "persona": user.persona.value,
        }

    @app.post("/chat")
    def chat(body: ChatBody, user: UserAccount = Depends(auth)):
        if not body.message.strip():
            raise _HttpEnvelope(422, "empty_message", "message must not be empty")
        with state.session_lock(user.id):
            session = state.session_for(user)
            result = run_turn(
                session,
                body.message,
                state.backend_for(user),
                state.runtime_for(user),
                on_history_change=state._save_sessions,
            )
        return {
            "reply": result.text,
            "reply_class": result.meta.get("class"),
            "sentiment": result.meta.get("sentiment"),
            "persona": user.persona.value,
            "tool_calls": [c.name for c in result.tool_calls],
        }

    @app.get("/slots")
    def slots(user: UserAccount = Depends(auth)):
        active, recent = state.reminders.list_for(user.id)
        return {
            "active": [_reminder_payload(r, user.timezone) for r in active],
            "recently_expired": [_reminder_payload(r, user.timezone) for r in recent],
        }

    @app.post("/reminders/{reminder_id}/confirm")
    def confirm(reminder_id: str, user: UserAccount = Depends(auth)):
        reminder = state.reminders.confirm(reminder_id, user.id)
        return _reminder_payload(reminder, user.timezone)

    @app.post("/reminders/{reminder_id}/cancel")
    def cancel(reminder_id: str, user: UserAccount = Depends(auth)):
        reminder = state.reminders.cancel(reminder_id, user.id)
        return _reminder_payload(reminder, user.timezone)

    @app.get("/notifications/poll")
    def poll(user: UserAccount = Depends(auth)):
        events = []
        for event in state.reminders.poll_events(user.id):
            try:
                reminder = state.reminders.get(event.reminder_id, user.id)
                reminder_info = _reminder_payload(reminder, user.timezone)
            except UnknownReminderError:
                reminder_info = None
            events.append(
                {
                    "id": event.id,
                    "reminder_id": event.reminder_id,
                    "fires_at": iso_utc(event.fires_at),
                    "acknowledged": event.acknowledged,
                    "reminder": reminder_info,
                }
            )
        return {"events": events}

    @app.post("/notifications/{event_id}/ack")
    def ack(event_id: str, user: UserAccount = Depends(auth)):
        state.reminders.ack_event(event_id, user.id)
        return {"ok": True}

    @app.get("/device")
    def device(user: UserAccount = Depends(auth)):
        return state.appliance.status().as_dict()

    @app.post("/clock/step")
    def clock_step(body: StepBody, user: UserAccount = Depends(auth)):
        now, fired = state.step_clock(body.seconds)
        return {"now": iso_utc(now), "fired": fired}

    return app


class _HttpEnvelope(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
