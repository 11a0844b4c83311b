class WaringError(Exception):
    """Base class for computation failures (CLI exit status 2)."""


class CapacityError(WaringError):
    """A table or enumeration would exceed its configured budget."""


class ConvergenceError(WaringError):
    """A quadrature or limiting process did not reach its tolerance."""


class StabilizationError(ConvergenceError):
    """A local density did not stabilize within its height budget."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
