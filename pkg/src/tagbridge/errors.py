"""Exception types shared across the package."""

from __future__ import annotations


class TagBridgeError(Exception):
    """Base class for every error this package raises deliberately."""


class ParseError(TagBridgeError):
    """An input file violates its documented format."""

    def __init__(self, message: str, *, line_number: int | None = None, path=None):
        self.line_number = line_number
        self.path = path
        if path is not None and line_number is not None:
            message = f"{path}:{line_number}: {message}"
        elif line_number is not None:
            message = f"line {line_number}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ConfigError(TagBridgeError):
    """Invalid or missing configuration value."""


class ValidationError(TagBridgeError):
    """Arguments violate a documented precondition."""


class CompositionError(TagBridgeError):
    """A tag could not be turned into a vector."""


class EvaluationError(TagBridgeError):
    """No defined metric value exists for the given inputs."""


class UnknownConceptError(TagBridgeError, KeyError):
    """A concept identifier is absent from the graph."""

    def __init__(self, concept: str):
        self.concept = concept
        super().__init__(f"unknown concept: {concept!r}")

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


class MissingEmbeddingError(TagBridgeError, KeyError):
    """A tag has no vector in the embedding set it was looked up in."""

    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"no embedding for tag: {tag!r}")

    def __str__(self) -> str:
        return self.args[0]


class FeasibilityError(TagBridgeError):
    """A graph component contains no concept with a known initial vector.

    ``components`` lists the offending components, each as a tuple of
    concept identifiers.
    """

    def __init__(self, message: str, components=()):
        self.components = tuple(tuple(c) for c in components)
        super().__init__(message)


class SolverError(TagBridgeError):
    """The linear system could not be solved despite passing feasibility."""
