from __future__ import annotations

import json
import re

import pytest

from washy.agent import (
    Backend,
    BackendReply,
    BackendRequest,
    ChatSession,
    MAX_HISTORY,
    RemoteBackend,
    ToolCall,
    check_history_bound,
    lint_live_reply,
    run_turn,
    truncate_history,
)
from washy.errors import TruncationError, ValidationError
from washy.forecast import DAY_PROFILES, synth_forecast
from washy.mock_backend import ConversationPolicy, MockBackend
from washy.prompts import PersonaKind
from washy.scheduler import SlotQuality
from washy.timeutil import parse_ts
from washy.tools import TOOL_NAMES, ToolRuntime


@pytest.fixture
def rt(clock, book, appliance):
    return ToolRuntime(
        user_id="alice",
        username="Alice",
        timezone="Europe/Rome",
        default_power_w=2000.0,
        clock=clock,
        forecast_provider=lambda now: synth_forecast(DAY_PROFILES["morning-peak"], 3, now),
        reminders=book,
        appliance=appliance,
        step_minutes=15,
    )


def make_session(persona=PersonaKind.TRADITIONAL):
    return ChatSession(user_id="alice", persona=persona, timezone="Europe/Rome", username="Alice")


def mock_backend(persona=PersonaKind.TRADITIONAL):
    return MockBackend(ConversationPolicy(persona=persona))


class SpyBackend(Backend):
    """Wraps a backend and records every request that crosses the seam."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.requests: list[BackendRequest] = []

    def complete(self, request: BackendRequest) -> BackendReply:
        self.requests.append(request)
        return self.inner.complete(request)


# -- core dispatch ---------------------------------------------------------------


def test_best_time_query_runs_one_window_lookup(rt):
    session = make_session()
    backend = SpyBackend(mock_backend())
    result = run_turn(session, "What's the best time to wash for 1 hour at 1000 W?", backend, rt)
    assert [c.name for c in result.tool_calls] == ["get_timewindows"]
    assert result.tool_calls[0].arguments == {"power": 1000, "duration_minutes": 60}
    # Reply names the best window rendered in the session's timezone.
    assert "2025-06-02 11:30" in result.text
    assert result.meta["class"] == "recommend"


def test_list_notifications_reply_has_times_but_no_ids(rt, clock, book):
    book.schedule("alice", parse_ts("2025-06-02T18:00:00Z"), 60, 10, quality=SlotQuality.GOOD)
    session = make_session()
    result = run_turn(session, "Show my notifications please", mock_backend(), rt)
    assert result.meta["class"] == "list"
    assert "20:00" in result.text  # 18:00 UTC rendered in Rome time
    assert not re.search(r"\br-\d{4}\b", result.text)


def test_horizon_refusal_has_no_tool_calls(rt):
    session = make_session()
    result = run_turn(session, "What's the forecast 5 days from now?", mock_backend(), rt)
    assert result.meta["class"] == "refusal"
    assert result.tool_calls == []


def test_empty_message_rejected(rt):
    with pytest.raises(ValidationError):
        run_turn(make_session(), "   ", mock_backend(), rt)


# -- history bounding ---------------------------------------------------------------


def test_truncate_history_keeps_last_20():
    messages = [{"role": "user", "content": str(i)} for i in range(25)]
    kept = truncate_history(messages)
    assert len(kept) == 20
    assert kept[0]["content"] == "5"


def test_truncate_history_short_and_boundary():
    five = [{"role": "user", "content": str(i)} for i in range(5)]
    assert truncate_history(five) == five
    twenty = [{"role": "user", "content": str(i)} for i in range(20)]
    assert truncate_history(twenty) == twenty


def test_truncate_history_drops_leading_orphan_tool_results():
    messages = [{"role": "user", "content": str(i)} for i in range(19)]
    messages.append({"role": "assistant", "content": None, "tool_calls": [{"id": "c1"}]})
    messages.append({"role": "tool", "tool_call_id": "c1", "content": "{}"})
    messages.extend({"role": "user", "content": f"x{i}"} for i in range(4))
    kept = truncate_history(messages)
    assert kept[0]["role"] != "tool"
    assert len(kept) <= 20


def test_check_history_bound_raises_over_limit():
    request = BackendRequest(
        session_id="s",
        system_prompt="p",
        messages=[{"role": "user", "content": str(i)} for i in range(21)],
        tools=[],
    )
    with pytest.raises(ValidationError):
        check_history_bound(request)


def test_thirty_turn_session_never_exceeds_window(rt):
    session = make_session()
    backend = SpyBackend(mock_backend())
    for i in range(30):
        run_turn(session, f"Hi, who are you? (turn {i})", backend, rt)
    assert len(backend.requests) >= 30
    worst = max(
        sum(1 for m in req.messages if m.get("role") != "system") for req in backend.requests
    )
    assert worst <= MAX_HISTORY


# -- failure modes ---------------------------------------------------------------------


class ExplodingBackend(Backend):
    def complete(self, request):
        raise RuntimeError("socket reset")


class LoopingBackend(Backend):
    def __init__(self):
        self.n = 0

    def complete(self, request):
        self.n += 1
        return BackendReply(tool_calls=[ToolCall(id=f"c{self.n}", name="list_notifications", arguments={})])


class BogusToolBackend(Backend):
    def __init__(self):
        self.rounds = 0

    def complete(self, request):
        self.rounds += 1
        if self.rounds == 1:
            return BackendReply(tool_calls=[ToolCall(id="c1", name="definitely_not_a_tool", arguments={})])
        last = request.messages[-1]
        return BackendReply(text=f"tool said: {last['content']}")


def test_backend_failure_becomes_conversational_error(rt):
    session = make_session()
    result = run_turn(session, "hello", ExplodingBackend(), rt)
    assert result.meta["class"] == "error"
    assert session.history[-1]["role"] == "assistant"


def test_loop_cap_raises_truncation_error(rt):
    with pytest.raises(TruncationError):
        run_turn(make_session(), "hello", LoopingBackend(), rt)


def test_unknown_tool_surfaces_as_tool_result_error(rt):
    session = make_session()
    result = run_turn(session, "hello", BogusToolBackend(), rt)
    assert "unknown_tool" in result.text
    tool_msgs = [m for m in session.history if m.get("role") == "tool"]
    assert json.loads(tool_msgs[0]["content"])["error"]["code"] == "unknown_tool"


def test_backend_reply_exactly_one_variant():
    with pytest.raises(ValidationError):
        BackendReply()
    with pytest.raises(ValidationError):
        BackendReply(text="x", tool_calls=[ToolCall(id="1", name="t", arguments={})])


# -- blueprint conformance ----------------------------------------------------------------


def test_bad_slot_once_counter_suggests_without_booking(rt, book):
    session = make_session()
    result = run_turn(session, "Schedule a laundry for 1 hour at 22:00", mock_backend(), rt)
    assert result.meta["class"] == "counter-suggest"
    assert book.list_for("alice") == ([], [])


def test_traditional_yields_after_one_insistence(rt, book):
    backend = mock_backend(PersonaKind.TRADITIONAL)
    session = make_session()
    run_turn(session, "Schedule a laundry for 1 hour at 22:00", backend, rt)
    result = run_turn(session, "I insist, do it anyway", backend, rt)
    assert result.meta["class"] == "regret"
    active, _ = book.list_for("alice")
    assert len(active) == 1


def test_personified_needs_two_insistences(rt, book):
    backend = mock_backend(PersonaKind.PERSONIFIED)
    session = make_session(PersonaKind.PERSONIFIED)
    run_turn(session, "Schedule a laundry for 1 hour at 22:00", backend, rt)
    first = run_turn(session, "I insist, do it anyway", backend, rt)
    assert first.meta["class"] == "counter-suggest"
    assert first.meta["sentiment"] == "anxious"
    assert book.list_for("alice") == ([], [])
    second = run_turn(session, "Please just set it", backend, rt)
    assert second.meta["class"] == "regret"
    active, _ = book.list_for("alice")
    assert len(active) == 1


def test_good_slot_booking_gets_compliment(rt, book):
    session = make_session()
    result = run_turn(session, "Schedule a 1 hour laundry at 11:30", mock_backend(), rt)
    assert result.meta["class"] == "compliment"
    active, _ = book.list_for("alice")
    assert len(active) == 1
    assert active[0].quality_at_booking.value == "Good"


def test_dispatch_totality_mock_only_emits_registered_tools(rt):
    session = make_session()
    backend = SpyBackend(mock_backend())
    for text in (
        "who are you?",
        "schedule a wash for 45 minutes",
        "schedule it at the best time",
        "show my notifications",
        "what is the best time for solar production?",
        "turn off the washing machine",
    ):
        run_turn(session, text, backend, rt)
    seen = {
        call["function"]["name"]
        for req in backend.requests
        for m in req.messages
        if m.get("tool_calls")
        for call in m["tool_calls"]
    }
    assert seen <= set(TOOL_NAMES)


def test_delete_flow_targets_named_time(rt, book):
    session = make_session()
    backend = mock_backend()
    run_turn(session, "Schedule a 1 hour laundry at 11:30", backend, rt)
    run_turn(session, "Schedule another one at 11:45", backend, rt)
    assert len(book.list_for("alice")[0]) == 2
    result = run_turn(session, "Please delete my notification at 11:45", backend, rt)
    assert result.meta["class"] == "delete"
    assert [c.name for c in result.tool_calls] == ["list_notifications", "delete_notification"]
    remaining = book.list_for("alice")[0]
    assert len(remaining) == 1
    assert remaining[0].slot_start.hour == 9  # the 11:30 Rome slot (09:30 UTC) survives


def test_explain_intent_answers_without_tools(rt):
    result = run_turn(make_session(), "How can you provide forecast data?", mock_backend(), rt)
    assert result.meta["class"] == "explain"
    assert result.tool_calls == []


# -- time discipline ------------------------------------------------------------------------


def test_persisted_times_are_utc_and_reply_times_are_local(rt, book):
    session = make_session()
    result = run_turn(session, "Schedule a 1 hour laundry at 11:30", mock_backend(), rt)
    active, _ = book.list_for("alice")
    stored = active[0].as_dict()
    assert stored["slot_start"].endswith("+00:00")
    assert parse_ts(stored["slot_start"]).utcoffset().total_seconds() == 0
    # 11:30 local == 09:30 UTC; the reply must show the local rendering.
    assert "11:30" in result.text
    assert "09:30" not in result.text


# -- remote backend -----------------------------------------------------------------------


def test_remote_backend_text_reply(http_stub):
    http_stub.payloads["/v1/chat"] = (200, {"choices": [{"message": {"content": "ciao"}}]})
    backend = RemoteBackend(url=f"{http_stub.base_url}/v1/chat", model="test-model", api_key="k")
    reply = backend.complete(
        BackendRequest(session_id="s", system_prompt="sys", messages=[{"role": "user", "content": "hi"}], tools=[])
    )
    assert reply.text == "ciao"
    sent = http_stub.requests[-1]
    assert sent["model"] == "test-model"
    assert sent["messages"][0] == {"role": "system", "content": "sys"}


def test_remote_backend_tool_call_reply(http_stub):
    http_stub.payloads["/v1/chat"] = (
        200,
        {
            "choices": [
                {
                    "message": {
                        "content": None,
                        "tool_calls": [
                            {
                                "id": "call_1",
                                "function": {
                                    "name": "get_timewindows",
                                    "arguments": json.dumps({"power": 800, "duration_minutes": 45}),
                                },
                            }
                        ],
                    }
                }
            ]
        },
    )
    backend = RemoteBackend(url=f"{http_stub.base_url}/v1/chat", model="m")
    reply = backend.complete(
        BackendRequest(session_id="s", system_prompt="sys", messages=[], tools=[])
    )
    assert reply.tool_calls[0].name == "get_timewindows"
    assert reply.tool_calls[0].arguments == {"power": 800, "duration_minutes": 45}


# -- advisory lint ----------------------------------------------------------------------------


def test_lint_live_reply_word_count_and_emoji():
    short = "Too short."
    findings = lint_live_reply(short, PersonaKind.PERSONIFIED)
    assert any("words" in f for f in findings)
    assert any("emoji" in f for f in findings)
    okay = " ".join(["word"] * 60) + " 😊"
    assert lint_live_reply(okay, PersonaKind.PERSONIFIED) == []
