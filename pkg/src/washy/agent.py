"""Conversational layer: bounded history, backend seam, tool-calling loop.

One turn sends the system prompt, the last 20 non-system messages and the
tool descriptors to a backend. The backend answers with either text (turn
ends) or tool calls (executed in order, results appended, loop continues).
The loop is capped at 5 backend rounds per turn.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Callable

import requests

from .errors import TruncationError, ValidationError
from .prompts import PersonaKind, PromptContext, build_system_prompt
from .tools import TOOL_DESCRIPTORS, ToolRuntime, execute_tool

logger = logging.getLogger(__name__)

MAX_HISTORY = 20
MAX_ROUNDS = 5


@dataclass
class ToolCall:
    id: str
    name: str
    arguments: dict


@dataclass
class BackendReply:
    """Exactly one of ``text`` / ``tool_calls`` is populated."""

    text: str | None = None
    tool_calls: list[ToolCall] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.text is None) == (self.tool_calls is None):
            raise ValidationError("backend reply must carry either text or tool calls")


@dataclass
class BackendRequest:
    session_id: str
    system_prompt: str
    messages: list[dict]
    tools: list[dict]


class Backend:
    """Interface over the language model; see MockBackend and RemoteBackend."""

    def complete(self, request: BackendRequest) -> BackendReply:
        raise NotImplementedError


@dataclass
class ChatSession:
    user_id: str
    persona: PersonaKind
    timezone: str
    username: str
    history: list[dict] = field(default_factory=list)

    @property
    def session_id(self) -> str:
        return self.user_id


@dataclass
class TurnResult:
    text: str
    meta: dict
    tool_calls: list[ToolCall]


def truncate_history(messages: list[dict]) -> list[dict]:
    """Keep the most recent 20 non-system messages.

    Tool-result messages whose originating assistant call was cut off the
    front are dropped too, so the window never starts with an orphan that a
    chat-completions endpoint would reject.
    """
    recent = [m for m in messages if m.get("role") != "system"][-MAX_HISTORY:]
    while recent and recent[0].get("role") == "tool":
        recent.pop(0)
    return recent


def check_history_bound(request: BackendRequest) -> None:
    """Transport-seam guard: no request may exceed the history window."""
    non_system = [m for m in request.messages if m.get("role") != "system"]
    if len(non_system) > MAX_HISTORY:
        raise ValidationError(
            f"backend request carries {len(non_system)} non-system messages (max {MAX_HISTORY})"
        )


def run_turn(
    session: ChatSession,
    user_msg: str,
    backend: Backend,
    rt: ToolRuntime,
    on_history_change: Callable[[], None] | None = None,
) -> TurnResult:
    """Run one conversational turn and return the assistant's text reply."""
    if not user_msg or not user_msg.strip():
        raise ValidationError("message is empty")

    def persist():
        if on_history_change is not None:
            on_history_change()

    session.history.append({"role": "user", "content": user_msg})
    persist()

    ctx = PromptContext(username=session.username, timezone=session.timezone, now=rt.clock.now())
    system_prompt = build_system_prompt(session.persona, ctx)

    executed: list[ToolCall] = []
    for _ in range(MAX_ROUNDS):
        request = BackendRequest(
            session_id=session.session_id,
            system_prompt=system_prompt,
            messages=truncate_history(session.history),
            tools=TOOL_DESCRIPTORS,
        )
        # The seam guard must fail loudly, not as a "backend down" reply.
        check_history_bound(request)
        try:
            reply = backend.complete(request)
        except Exception:
            logger.exception("backend failure for session %s", session.session_id)
            text = "Sorry, I could not reach my language model just now. Please try again."
            session.history.append({"role": "assistant", "content": text})
            persist()
            return TurnResult(text=text, meta={"class": "error"}, tool_calls=executed)

        if reply.tool_calls:
            session.history.append(
                {
                    "role": "assistant",
                    "content": None,
                    "tool_calls": [
                        {
                            "id": call.id,
                            "type": "function",
                            "function": {
                                "name": call.name,
                                "arguments": json.dumps(call.arguments),
                            },
                        }
                        for call in reply.tool_calls
                    ],
                }
            )
            for call in reply.tool_calls:
                result = execute_tool(call.name, call.arguments, rt)
                executed.append(call)
                session.history.append(
                    {
                        "role": "tool",
                        "tool_call_id": call.id,
                        "name": call.name,
                        "content": json.dumps(result),
                    }
                )
            persist()
            continue

        session.history.append({"role": "assistant", "content": reply.text})
        persist()
        return TurnResult(text=reply.text, meta=dict(reply.meta), tool_calls=executed)

    raise TruncationError(f"turn exceeded {MAX_ROUNDS} backend rounds without a text reply")


class RemoteBackend(Backend):
    """Client for a chat-completions HTTP endpoint with tool calling.

    The request body carries the model id, the message list (system first)
    and the tool descriptors; the response's first choice contains either
    assistant text or tool-call objects with JSON-encoded arguments.
    Configure via WASHY_LLM_URL / WASHY_LLM_KEY / WASHY_LLM_MODEL.
    """

    def __init__(self, url: str, model: str, api_key: str = "", timeout: float = 60.0):
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout = timeout

    def complete(self, request: BackendRequest) -> BackendReply:
        messages = [{"role": "system", "content": request.system_prompt}] + request.messages
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        response = requests.post(
            self.url,
            json={"model": self.model, "messages": messages, "tools": request.tools},
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        message = response.json()["choices"][0]["message"]
        raw_calls = message.get("tool_calls")
        if raw_calls:
            calls = [
                ToolCall(
                    id=c.get("id", f"call-{i}"),
                    name=c["function"]["name"],
                    arguments=json.loads(c["function"].get("arguments") or "{}"),
                )
                for i, c in enumerate(raw_calls)
            ]
            return BackendReply(tool_calls=calls)
        return BackendReply(text=message.get("content") or "")


_EMOJI_RE = re.compile(
    "[\U0001f300-\U0001faff\U00002600-\U000027bf\U0001f000-\U0001f02f✀-➿]"
)


def lint_live_reply(text: str, persona: PersonaKind) -> list[str]:
    """Advisory style check for live-model transcripts only.

    The shipped prompts ask a live model for 50-100 word replies (plus a few
    emojis for the personified persona). Those are stylistic obligations of
    the remote model, so this lint reports rather than fails, and the
    deterministic mock suite never applies it.
    """
    findings = []
    words = len(text.split())
    if words < 50:
        findings.append(f"reply has {words} words, below the 50-100 word target")
    elif words > 100:
        findings.append(f"reply has {words} words, above the 50-100 word target")
    if persona is PersonaKind.PERSONIFIED and not _EMOJI_RE.search(text):
        findings.append("personified reply contains no emoji")
    return findings
