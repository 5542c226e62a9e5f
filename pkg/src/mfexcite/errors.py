class ConfigError(ValueError):
    """Invalid model, coupling or scenario configuration."""


class NumericError(ArithmeticError):
    """A non-finite value showed up where a finite one is required."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class BlowUpError(NumericError):
    """Trajectory left the finite / bounded region."""

    def __init__(self, message, t, index=None):
        super().__init__(message)
        self.t = t
        self.index = index


class BracketError(ValueError):
    """A bracketing method was given an interval without a transition."""
