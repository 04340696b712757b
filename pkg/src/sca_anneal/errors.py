"""Exception types shared across the package.

Each class maps to one CLI exit code (see ``sca_anneal.cli``).
"""


class InvalidInputError(ValueError):
    """Malformed arguments: wrong lengths, out-of-range vertices, bad parameters."""


class ConfigurationError(ValueError):
    """Inconsistent experiment setup, e.g. an SCA engine without pinning."""


class NumericalError(ArithmeticError):
    """An iterative numerical method failed to converge."""
