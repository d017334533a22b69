"""Exception hierarchy shared by every labanlite module.

Every domain failure derives from :class:`LabanLiteError` so callers (and the
CLI, which maps these to exit code 1) can catch them in one place.
"""

from __future__ import annotations


class LabanLiteError(Exception):
    """Base class for all domain errors."""


# core_model
class OutOfRange(LabanLiteError, IndexError):
    pass


class UnmappedValue(LabanLiteError, ValueError):
    pass


class AmbiguousActivation(LabanLiteError, ValueError):
    pass


class MissingAttribute(LabanLiteError, ValueError):
    pass


# motion_io
class DegeneratePose(LabanLiteError, ValueError):
    pass


class ParseError(LabanLiteError, ValueError):
    """Malformed text input; carries the 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class JointCountMismatch(LabanLiteError, ValueError):
    pass


class TooShort(LabanLiteError, ValueError):
    pass


# detection
class EmptyInterval(LabanLiteError, ValueError):
    pass


# score
class OverlapError(LabanLiteError, ValueError):
    pass


class EventOutOfRange(OverlapError):
    """An event reaches past the last frame of the target sequence."""


class UnknownColumn(LabanLiteError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown column"


# concept
class GrammarError(LabanLiteError, ValueError):
    pass


class UnknownSemantic(GrammarError):
    pass


class UnknownGroup(GrammarError):
    pass


class DurationMismatch(LabanLiteError, ValueError):
    pass


class EmptyScript(LabanLiteError, ValueError):
    pass


# metrics
class ShapeMismatch(LabanLiteError, ValueError):
    pass


# compose
class EmptyDatabase(LabanLiteError, ValueError):
    pass


class EvalSplitRecord(LabanLiteError, ValueError):
    """A record from the evaluation split was offered to the retrieval pool."""


class DuplicateCaption(LabanLiteError, ValueError):
    pass


class NoReferences(LabanLiteError, ValueError):
    pass


class ReplyError(LabanLiteError, ValueError):
    """Base for LLM reply problems that justify a re-prompt."""


class MissingSection(ReplyError):
    pass


class TupleError(ReplyError):
    def __init__(self, message: str, position: int = 0):
        self.position = position
        super().__init__(f"at offset {position}: {message}")


class IndexOutOfTable(ReplyError):
    pass


class LlmUnavailable(LabanLiteError, RuntimeError):
    pass


class ComposeFailed(LabanLiteError, RuntimeError):
    def __init__(self, message: str, attempts: list[str] | None = None):
        self.attempts = attempts or []
        super().__init__(message)


# synth_decode
class UnreachableTarget(LabanLiteError, ValueError):
    pass


class UnreachableWarning(UserWarning):
    """Emitted when decode clamps a target to the limb's reach."""
