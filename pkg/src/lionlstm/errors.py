"""Exception types shared across the toolkit.

The CLI maps each class to a stable exit code: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class LionLstmError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LionLstmError, ValueError):
    """Invalid configuration or argument combination."""


class DataError(LionLstmError, ValueError):
    """Input data that violates the series schema or a size precondition."""


class NumericalError(LionLstmError, ArithmeticError):
    """A computation produced a non-finite value."""


class LeadTimeWarning(UserWarning):
    """Forecast horizon beyond the 12-month range the models are validated for."""
