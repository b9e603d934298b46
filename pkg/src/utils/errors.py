"""
Exception types raised by courant-kit.

Failed mathematical checks are reported as results; these exceptions signal
bad input, unmet preconditions or internal inconsistencies.
"""


class CourantKitError(Exception):
    """Base class for all courant-kit errors."""


class DimensionMismatchError(CourantKitError):
    """Operands live on different tori, ranks or index ranges."""


class MalformedInputError(CourantKitError):
    """Input could not be parsed or does not match its schema."""


class ModelValidationError(CourantKitError):
    """A parsed model or structure violates one of its defining identities."""


class PreconditionError(CourantKitError):
    """An operation was called outside of its domain."""


class InconsistentSystemError(CourantKitError):
    """An exact linear system that must be solvable has no solution."""


class UnsupportedSignatureError(CourantKitError):
    """The scalar product has a signature the spinor machinery does not handle."""
