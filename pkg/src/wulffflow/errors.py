"""Exception hierarchy shared by all modules."""


class WulffFlowError(Exception):
    """Base class for all package errors."""


class DomainError(WulffFlowError, ValueError):
    """An argument lies outside the domain of an operation (e.g. a zero vector)."""


class ConfigError(WulffFlowError):
    """Invalid configuration text or values.

    ``line`` is the 1-based line number for parse errors, ``key`` the offending
    key for semantic errors; either may be None.
    """

    def __init__(self, message, line=None, key=None):
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if key is not None:
            prefix.append(f"key '{key}'")
        text = f"{', '.join(prefix)}: {message}" if prefix else message
        super().__init__(text)
        self.line = line
        self.key = key


class NumericError(WulffFlowError, ArithmeticError):
    """A numerical procedure failed (degenerate data, non-convergence)."""


class DualConvergenceError(NumericError):
    """The sup-ratio optimizer for the dual norm did not converge.

    ``best`` holds the best lower bound found for each requested point.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateNodeError(NumericError):
    """Geometry evaluation hit a degenerate node (see ``node``)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class FlowBreakdownError(NumericError):
    """The flow left the admissible class (H_F <= 0, u <= 0 or non-finite data)."""

    def __init__(self, message, node=None, t=None):
        super().__init__(message)
        self.node = node
        self.t = t
