"""Exception hierarchy shared by all iflow modules."""


class IflowError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(IflowError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class ConfigError(IflowError):
    """Bad lattice, label file, or option combination."""


class AnalysisError(IflowError):
    """A static analysis was handed inconsistent inputs (unbound variable, missing copy)."""


class EvalError(IflowError):
    """Runtime error while evaluating an expression (modulo by zero, overflow)."""


class InternalError(IflowError):
    """An invariant the implementation relies on was broken; always a bug."""
