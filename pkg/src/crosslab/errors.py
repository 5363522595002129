"""Exception types raised by crosslab."""


class CrossLabError(Exception):
    """Base class for all crosslab failures."""


class SystemMismatch(CrossLabError, ValueError):
    """Two objects live on different dynamical systems, or shapes disagree."""


class TruncationError(CrossLabError, ValueError):
    """A box or mode cutoff is too small for the requested operation."""


class NotHermitianError(CrossLabError, ValueError):
    pass


class UnsupportedSpace(CrossLabError, ValueError):
    """The operation needs a different kind of space X (finite, torus, ...)."""


class NumericalError(CrossLabError, RuntimeError):
    """An eigen-decomposition failed its sanity identities."""


class ConfigError(CrossLabError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
