"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition (shape, range, finiteness)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConfigError(InvalidInputError):
    """A run configuration or instance file is malformed."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message, field=field)
        self.line = line


class DegenerateInstanceError(InvalidInputError):
    """The instance has tied optima where a strict gap is required."""


class NumericalError(ArithmeticError):
    """An iterate became non-finite during optimization."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
