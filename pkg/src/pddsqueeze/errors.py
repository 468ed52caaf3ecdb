"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operator/state sizes do not agree."""


class InvariantError(RuntimeError):
    """A state or result broke a numerical invariant beyond tolerance."""


class StepSizeError(ValueError):
    """Requested RK4 step is too coarse for the model's fastest frequency."""


class ConfigError(ValueError):
    """Malformed or incomplete scenario configuration."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
