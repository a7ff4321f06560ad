"""Exception types shared across the package."""


class FbbellError(Exception):
    """Base class for all package errors."""


class ContractViolation(FbbellError, ValueError):
    """An argument violated a documented precondition."""


class OutOfModelError(FbbellError, ValueError):
    """A request referenced something outside the four-bin model."""


class DegenerateStateError(FbbellError):
    """A physical configuration produced an all-zero (unusable) state."""


class NumericalError(FbbellError):
    """A numerical routine failed to produce a trustworthy result."""


class ConfigError(FbbellError):
    """A run configuration is malformed; message names the offending field."""
