"""Exception hierarchy shared by all gridguide modules."""


class GridGuideError(Exception):
    """Base class for all errors raised by gridguide."""


class InvalidInputError(GridGuideError, ValueError):
    """An argument violates a documented precondition."""


class SingularConfigurationError(GridGuideError):
    """A rod state is degenerate (zero-length edge, antiparallel edges)."""


class ConvergenceError(GridGuideError):
    """The inner equilibrium solver did not reach the gradient tolerance.

    Carries the last iterate so callers can inspect or retry from it.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StalledCollapseError(GridGuideError):
    """The collapse rate control underflowed before reaching zero anchor weight."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SchemaError(GridGuideError):
    """A model/trace/path file failed schema validation."""


class DanglingReferenceError(SchemaError):
    """A file references an entity (member, vertex) that does not exist."""


class ProvenanceError(GridGuideError):
    """Pipeline stage inputs do not match the recorded provenance hashes."""
