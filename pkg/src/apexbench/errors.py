"""Exception types shared by the executive, the timebase and the benchmarks.

Every error carries a stable ``code`` string so callers (and the CLI) can
report it without depending on the class hierarchy.
"""

from __future__ import annotations


class ApexBenchError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "") -> None:
        super().__init__(message or self.code)


class ConfigInvalid(ApexBenchError):
    code = "CONFIG_INVALID"


# -- executive / APEX return codes ------------------------------------------

class ApexError(ApexBenchError):
    """Raised into a process when an APEX service fails."""


class DuplicateName(ApexError):
    code = "DUPLICATE_NAME"


class ResourceExhausted(ApexError):
    code = "RESOURCE_EXHAUSTED"


class InvalidState(ApexError):
    code = "INVALID_STATE"


class InvalidMode(ApexError):
    code = "INVALID_MODE"


class UnknownName(ApexError):
    code = "UNKNOWN_NAME"


class UnknownId(ApexError):
    code = "UNKNOWN_ID"


class Underflow(ApexError):
    code = "UNDERFLOW"


class Overflow(ApexError):
    code = "OVERFLOW"


class TimedOut(ApexError):
    code = "TIMED_OUT"


class NotOwner(ApexError):
    code = "NOT_OWNER"


class MessageTooLong(ApexError):
    code = "MSG_TOO_LONG"


class DirectionMismatch(ApexError):
    code = "DIRECTION_MISMATCH"


class NoMessage(ApexError):
    code = "NO_MESSAGE"


class IllegalRequest(ApexError):
    code = "ILLEGAL_REQUEST"


# -- measurement --------------------------------------------------------------

class LifecycleViolation(ApexBenchError):
    code = "LIFECYCLE_VIOLATION"


class UnmatchedEnd(LifecycleViolation):
    code = "UNMATCHED_END"


class EmptySeries(ApexBenchError):
    code = "EMPTY_SERIES"


# -- benchmark suite ----------------------------------------------------------

class UnknownCall(ApexBenchError):
    code = "UNKNOWN_CALL"


class NegativeWeight(ApexBenchError):
    code = "NEGATIVE_WEIGHT"


class ImageTooSmall(ApexBenchError):
    code = "IMAGE_TOO_SMALL"


class DimensionMismatch(ApexBenchError):
    code = "DIMENSION_MISMATCH"


class ProcessFault(ApexBenchError):
    """A process body raised; re-raised out of ``Kernel.run`` in strict mode."""

    code = "PROCESS_FAULT"
