"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands live in different ambient dimensions."""


class UnsupportedSetOperation(NotImplementedError):
    """The signal set does not implement the requested operation."""


class NumericalFailure(RuntimeError):
    """An iterative routine diverged or failed to converge.

    Carries optional diagnostics (e.g. the residual at the point of
    failure) in ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class SpecValidationError(ValueError):
    """An experiment spec or CLI input failed validation."""
