"""Smart-plug control and the washing machine's latch-and-start model.

The machine is operated the way the lab rig is primed: pick a program while
the plug is on, then cut the plug. The program stays latched, so the next
off-to-on relay edge resumes the cycle. ``running`` therefore implies
``plug_on`` in every reachable state, and only a latched off-to-on edge can
set it.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from datetime import datetime

import requests

from .clock import Clock
from .errors import DeviceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeviceState:
    plug_on: bool
    program_latched: bool
    running: bool
    last_change: datetime

    def as_dict(self) -> dict:
        return {
            "plug_on": self.plug_on,
            "program_latched": self.program_latched,
            "running": self.running,
            "last_change": self.last_change.isoformat(),
        }


class PlugDriver:
    """Relay transport: turn_on/turn_off/is_on. Implementations may raise
    DeviceError; state semantics live in Appliance, not here."""

    def turn_on(self) -> None:
        raise NotImplementedError

    def turn_off(self) -> None:
        raise NotImplementedError

    def is_on(self) -> bool:
        raise NotImplementedError


class SimulatedPlug(PlugDriver):
    """In-memory relay; never errors. Default driver for tests and replays."""

    def __init__(self, initially_on: bool = False):
        self._on = initially_on

    def turn_on(self) -> None:
        self._on = True

    def turn_off(self) -> None:
        self._on = False

    def is_on(self) -> bool:
        return self._on


class HttpPlug(PlugDriver):
    """Driver for relays controlled over plain HTTP.

    Wire formats differ across plug generations, so the three requests are
    plain URL templates from configuration. Any 2xx answer counts as success;
    only the status response body is read (one JSON boolean field).
    """

    def __init__(
        self,
        on_url: str,
        off_url: str,
        status_url: str,
        status_field: str = "ison",
        timeout: float = 5.0,
    ):
        self.on_url = on_url
        self.off_url = off_url
        self.status_url = status_url
        self.status_field = status_field
        self.timeout = timeout

    def _get(self, url: str) -> requests.Response:
        try:
            response = requests.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise DeviceError(f"plug request failed: {exc}", retriable=True) from exc
        if not 200 <= response.status_code < 300:
            raise DeviceError(
                f"plug returned HTTP {response.status_code}",
                retriable=response.status_code >= 500,
            )
        return response

    def turn_on(self) -> None:
        self._get(self.on_url)

    def turn_off(self) -> None:
        self._get(self.off_url)

    def is_on(self) -> bool:
        response = self._get(self.status_url)
        try:
            payload = response.json()
        except ValueError as exc:
            raise DeviceError(f"plug status is not JSON: {exc}", retriable=False) from exc
        if self.status_field not in payload:
            raise DeviceError(f"plug status missing field {self.status_field!r}", retriable=False)
        return bool(payload[self.status_field])


class Appliance:
    """Washing machine behind a smart plug.

    Mutations take one lock (same serialized-writer discipline as the
    reminder store), so the background tick and request handlers never
    interleave mid-transition. Driver calls block inside the lock.
    """

    def __init__(self, driver: PlugDriver, clock: Clock, program_latched: bool = False):
        self.driver = driver
        self.clock = clock
        self._lock = threading.RLock()
        self._plug_on = driver.is_on()
        self._latched = program_latched
        self._running = False
        self._last_change = clock.now()

    def plug_on(self) -> DeviceState:
        with self._lock:
            self.driver.turn_on()
            was_on = self._plug_on
            self._plug_on = True
            if not was_on and self._latched:
                self._running = True
            self._last_change = self.clock.now()
            return self.status()

    def plug_off(self) -> DeviceState:
        with self._lock:
            self.driver.turn_off()
            self._plug_on = False
            self._running = False
            self._last_change = self.clock.now()
            return self.status()

    def latch_program(self) -> DeviceState:
        # Idempotent; survives plug cycles until explicitly cleared.
        with self._lock:
            self._latched = True
            return self.status()

    def clear_program(self) -> DeviceState:
        with self._lock:
            self._latched = False
            self._running = False
            return self.status()

    def status(self) -> DeviceState:
        with self._lock:
            return DeviceState(
                plug_on=self._plug_on,
                program_latched=self._latched,
                running=self._running,
                last_change=self._last_change,
            )

    def start_cycle(self) -> DeviceState:
        """Power the plug to resume the latched program (reminder auto-start)."""
        state = self.plug_on()
        logger.info("appliance start requested: running=%s", state.running)
        return state
