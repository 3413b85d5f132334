"""Exception taxonomy shared across the package."""


class BlowupLabError(Exception):
    """Base class for all package errors."""


class DomainError(BlowupLabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericError(BlowupLabError, RuntimeError):
    """A numerical procedure failed to reach its accuracy contract."""


class BlowupOvershootError(NumericError):
    """A time step produced non-finite values (stepped past the singularity)."""


class ConfigurationError(BlowupLabError, ValueError):
    """A constructed object violates its configuration invariants."""


class ContractViolation(BlowupLabError, ValueError):
    """Mismatched grids or otherwise incompatible arguments."""


class TruncationError(BlowupLabError, ValueError):
    """A change of variables left the truncated computational domain."""


class ResolutionError(BlowupLabError, ValueError):
    """The grid is too coarse to resolve the requested quantity."""


class FitError(BlowupLabError, RuntimeError):
    """Least-squares rate fit could not be performed."""


class ParseError(BlowupLabError, ValueError):
    """A run-configuration document is malformed."""
