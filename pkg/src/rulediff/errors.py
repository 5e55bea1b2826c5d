"""Exception hierarchy shared by all rulediff modules."""

from __future__ import annotations


class RulediffError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(RulediffError):
    """A JSON document does not match the expected schema."""


class StructureError(RulediffError):
    """A formalization violates a tree invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid formalization structure: {detail}")


class UnknownTree(RulediffError):
    """A tree id is not part of the loaded formalizations or matching."""


class PartitionError(RulediffError):
    """Matching classes do not partition the participating nodes."""


class DuplicateTreeInEC(RulediffError):
    """An equivalence class holds two nodes of the same formalization."""


class CycleError(RulediffError):
    """The lifted equivalence-class relation contains a cycle."""


class EmptyInput(RulediffError):
    pass


class InternalError(RulediffError):
    pass


class UnboundVariable(RulediffError):
    pass


class ResourceLimit(RulediffError):
    """A solver exceeded its configured conflict or time budget."""


class TooManyVariables(RulediffError):
    pass


class BadEdges(RulediffError):
    pass


class LengthMismatch(RulediffError):
    pass


class ConfigError(RulediffError):
    pass


class TransportError(RulediffError):
    """The chat-completion endpoint could not be reached or answered badly."""


class ValidationExhausted(RulediffError):
    """Every attempt, including correction retries, failed validation."""

    def __init__(self, message, attempts=()):
        super().__init__(message)
        self.attempts = list(attempts)
