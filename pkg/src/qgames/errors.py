"""Exception hierarchy shared by all qgames modules."""


class QGamesError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QGamesError, ValueError):
    """An input value violates a structural invariant (non-unitary gate,
    unnormalized state, malformed distribution, ...)."""


class RangeError(ValidationError):
    """A numeric parameter lies outside its documented range."""


class ConfigError(QGamesError, ValueError):
    """A run configuration is malformed or inconsistent."""


class ConvergenceError(QGamesError, RuntimeError):
    """An iterative procedure failed to reach its stopping criterion."""
