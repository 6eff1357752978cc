"""Exception types shared across the package."""


class QPoissonError(Exception):
    """Base class of every error raised on purpose by this package."""


class InvalidParameter(QPoissonError, ValueError):
    """A caller-supplied parameter is outside its documented domain."""


class FixedPointOverflowError(QPoissonError, ArithmeticError):
    """A fixed-point result does not fit in its declared width."""


class ResourceLimitError(QPoissonError, RuntimeError):
    """A dense construction was requested beyond the configured size limit."""


class DegenerateInputError(QPoissonError, ValueError):
    """An input vector has zero norm."""


class PostselectionError(QPoissonError, RuntimeError):
    """Post-selection on an outcome of (numerically) zero probability."""


class ContractViolation(QPoissonError, RuntimeError):
    """A unitary-level contract was broken (e.g. a non-injective basis map)."""


class LayoutViolation(ContractViolation):
    """Amplitude was found outside the register block an operation requires."""
