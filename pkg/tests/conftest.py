from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from washy.clock import VirtualClock
from washy.devices import Appliance, SimulatedPlug
from washy.reminders import ReminderBook

UTC = timezone.utc

# Fixed anchor used across tests: a June Monday, 09:13 UTC (11:13 in Rome).
T0 = datetime(2025, 6, 2, 9, 13, tzinfo=UTC)


@pytest.fixture
def clock():
    return VirtualClock(T0)


@pytest.fixture
def appliance(clock):
    return Appliance(SimulatedPlug(), clock, program_latched=True)


@pytest.fixture
def book(clock, tmp_path, appliance):
    return ReminderBook(
        clock=clock, path=tmp_path / "reminders.json", appliance_start=appliance.start_cycle
    )


class _StubHandler(BaseHTTPRequestHandler):
    """Serves canned JSON payloads keyed by path prefix; records POST bodies."""

    payloads: dict = {}
    requests: list = []

    def _serve(self):
        for prefix, (status, body) in self.payloads.items():
            if self.path.startswith(prefix):
                data = body if isinstance(body, (bytes, str)) else json.dumps(body)
                raw = data.encode() if isinstance(data, str) else data
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)
                return
        self.send_response(404)
        self.end_headers()

    def do_GET(self):  # noqa: N802 (http.server API)
        self._serve()

    def do_POST(self):  # noqa: N802
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length) if length else b""
        try:
            self.requests.append(json.loads(body))
        except ValueError:
            self.requests.append(body)
        self._serve()

    def log_message(self, *args):
        pass


@pytest.fixture
def http_stub():
    """A local HTTP server; assign ``stub.payloads[path_prefix] = (status, body)``."""
    handler = type("Handler", (_StubHandler,), {"payloads": {}, "requests": []})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.payloads = handler.payloads
    server.requests = handler.requests
    server.base_url = f"http://127.0.0.1:{server.server_port}"
    yield server
    server.shutdown()
    thread.join(timeout=2)
