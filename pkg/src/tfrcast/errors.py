"""Exception hierarchy shared across the package."""


class ForecastError(Exception):
    """Base class for all tfrcast errors."""


class DataValidationError(ForecastError):
    """Input data violates a schema, invariant, or cross-reference."""


class UnsupportedPhaseError(ForecastError):
    """An operation was asked to evaluate a phase it does not model."""


class InsufficientDataError(ForecastError):
    """Too few observations for the requested estimate."""
