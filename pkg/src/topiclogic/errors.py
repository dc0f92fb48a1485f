"""Exception hierarchy shared by all modules."""


class TopicLogicError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(TopicLogicError, ValueError):
    """Operand shapes do not agree."""


class NonFiniteError(TopicLogicError, ValueError):
    """Input contains NaN or infinite entries."""


class EigenConvergenceError(TopicLogicError):
    """The eigensolver failed to converge."""


class SingularMatrixError(TopicLogicError):
    """A linear system is singular to working tolerance."""

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = pivot


class GraphError(TopicLogicError, ValueError):
    """Invalid adjacency/Laplacian input."""


class NoSpanningTreeError(TopicLogicError):
    """An operation needs a directed spanning tree but the graph has none."""


class LogicAssumptionError(TopicLogicError):
    """The logic matrix violates the eigenstructure/diagonal assumption."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class ConditionNotSatisfiedError(TopicLogicError):
    """A convergence condition fails, so the requested limit does not exist."""


class IntegrationError(TopicLogicError):
    """Non-finite state encountered while integrating."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class ScenarioError(TopicLogicError, ValueError):
    """A scenario document failed validation.

    ``violations`` holds every problem found, each as ``(key_path, message)``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{path}: {msg}" for path, msg in self.violations]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))
