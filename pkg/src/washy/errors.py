"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``code`` so the HTTP layer can
map exceptions onto one response envelope without string matching.
"""

from __future__ import annotations


class WashyError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str, detail: str | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail


class ValidationError(WashyError):
    """An invariant on input data was violated."""

    code = "invalid"


class HorizonError(WashyError):
    """A request reaches beyond the 3-day forecast horizon."""

    code = "horizon"


class ForecastFetchError(WashyError):
    """Remote forecast retrieval failed."""

    code = "fetch_failed"

    def __init__(self, message: str, retriable: bool = True, detail: str | None = None):
        super().__init__(message, detail)
        self.retriable = retriable


class ForecastDecodeError(WashyError):
    """Remote forecast payload could not be decoded."""

    code = "decode_failed"


class EmptyForecastError(WashyError):
    """A forecast source produced no usable samples."""

    code = "empty_forecast"


class NoWindowError(WashyError):
    """No candidate time window fits inside the forecast horizon."""

    code = "no_window"


class PastSlotError(WashyError):
    """Attempt to book a slot that is not in the future."""

    code = "past_slot"


class LeadRangeError(WashyError):
    """Notification lead time outside the allowed 0-60 minute range."""

    code = "lead_range"


class UnknownReminderError(WashyError):
    """Reminder id does not exist (or belongs to another user)."""

    code = "unknown_reminder"


class TransitionError(WashyError):
    """Reminder operation not allowed in its current state."""

    code = "illegal_transition"

    def __init__(self, message: str, current_state: str):
        super().__init__(message, detail=f"current state: {current_state}")
        self.current_state = current_state


class DeviceError(WashyError):
    """Smart-plug driver I/O failure."""

    code = "device_error"

    def __init__(self, message: str, retriable: bool = True, detail: str | None = None):
        super().__init__(message, detail)
        self.retriable = retriable


class TemplateError(WashyError):
    """System-prompt assembly failed (bad context or unresolved placeholder)."""

    code = "template_error"


class UnknownToolError(WashyError):
    """The backend requested a tool that is not registered."""

    code = "unknown_tool"


class TruncationError(WashyError):
    """The tool-calling loop exceeded its round cap without a text reply."""

    code = "loop_cap"


class ConfigError(WashyError):
    """Configuration file missing or malformed."""

    code = "config_error"
