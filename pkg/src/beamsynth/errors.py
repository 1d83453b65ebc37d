"""Exception types shared across the package."""


class BeamsynthError(Exception):
    """Base class for package errors."""


class DomainError(BeamsynthError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigurationError(BeamsynthError, ValueError):
    """A configuration (spec, scenario, weights file) is invalid."""
