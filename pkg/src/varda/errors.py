"""Exception hierarchy shared by every varda module."""

from __future__ import annotations

from typing import Any


class VardaError(Exception):
    """Base class for all varda errors."""


class ContractViolation(VardaError, ValueError):
    """A precondition on shapes, ranges or arguments does not hold."""


class DomainError(VardaError, ValueError):
    """A math op was applied outside its domain (log of 0, division by 0, ...)."""


class TapeError(ContractViolation):
    """Backward was requested on a tape that was already consumed."""


class FormatError(VardaError):
    """Malformed binary record or manifest."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        where = ""
        if offset is not None:
            where = f" (at byte offset {offset})"
        elif line is not None:
            where = f" (at line {line})"
        super().__init__(f"{message}{where}")
        self.offset = offset
        self.line = line


class ConfigError(VardaError):
    """Config file could not be parsed or does not match a checkpoint."""

    def __init__(self, message: str, *, line: int | None = None, diff: list[str] | None = None):
        text = message if line is None else f"line {line}: {message}"
        if diff:
            text += "\n" + "\n".join(f"  {entry}" for entry in diff)
        super().__init__(text)
        self.line = line
        self.diff = diff or []


class GenerationError(VardaError):
    """Synthetic geometry could not be drawn within the retry budget."""


class NumericalAbort(VardaError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, diagnostics: dict[str, Any]):
        super().__init__(message)
        self.diagnostics = diagnostics
