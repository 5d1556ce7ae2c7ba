"""Exception hierarchy shared across the package."""


class StyleIrlError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StyleIrlError):
    """Input violates a documented invariant (non-finite values, bad shapes, bad config)."""


class DimensionMismatchError(ValidationError):
    """Array dimensions do not match the model/feature set they are used with."""


class NumericalError(StyleIrlError):
    """A numerical routine failed (non-PD Hessian, non-finite cost, divergence)."""


class CsvSchemaError(StyleIrlError):
    """A CSV file violates the documented trajectory schema."""


class ArchiveError(StyleIrlError):
    """A model archive is unreadable, corrupt, or has an unsupported version."""
