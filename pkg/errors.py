"""Exceptions raised by the trace reconstruction library."""
from typing import Optional


class TraceRecError(Exception):
    """Base class for every error raised by this package."""


class ParamError(TraceRecError, ValueError):
    """A code or channel parameter violates one of its constraints."""

    def __init__(self, constraint: str, message: Optional[str] = None):
        self.constraint = constraint
        super().__init__(message or f"parameter constraint failed: {constraint}")


class FormatError(TraceRecError, ValueError):
    """Bit-sequence text contains something other than '0', '1' or whitespace."""

    def __init__(self, position: int, char: str, line: Optional[int] = None):
        self.position = position
        self.char = char
        self.line = line
        where = f"line {line}, position {position}" if line is not None else f"position {position}"
        super().__init__(f"invalid character {char!r} at {where}")


class SamplerExhausted(TraceRecError, RuntimeError):
    """No member of the constrained set was found."""

    def __init__(self, attempts: int, detail: str = ""):
        self.attempts = attempts
        msg = f"sampler gave up after {attempts} attempts"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class RllViolation(TraceRecError, ValueError):
    """An information word produced a run longer than the run-length limit."""

    def __init__(self, position: int, length: int, max_run: int):
        self.position = position
        self.length = length
        self.max_run = max_run
        super().__init__(
            f"run of length {length} starting at position {position} exceeds max_run={max_run}"
        )


class DomainError(TraceRecError, ValueError):
    """A numeric routine was called outside its domain."""


class ConfigError(TraceRecError, ValueError):
    """An experiment configuration file is malformed."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(message)
