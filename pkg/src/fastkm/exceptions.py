"""Exception and warning types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class ParameterError(ValueError):
    """A numerical parameter is outside its admissible range."""


class HistoryError(ValueError):
    """Not enough iterate history to evaluate a quantity."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ParameterWarning(UserWarning):
    """Parameter accepted, but outside the range with fast-rate guarantees."""
