"""Exception types shared across the package."""


class InvalidConfigError(ValueError):
    """A parameter bundle violates its validity constraints."""


class InvalidQueryError(ValueError):
    """A correlation query is malformed (negative lag, bad index)."""


class UndefinedMsscError(InvalidConfigError):
    """The mean squared spatial correlation needs at least two sensors."""


class DomainError(ValueError):
    """An input is outside the mathematical domain of the operation."""


class DecompositionError(RuntimeError):
    """Covariance factorization failed even after diagonal jitter."""


class BracketError(RuntimeError):
    """A scalar root could not be bracketed on the feasible interval."""


class RegionDegenerateError(RuntimeError):
    """The scheme-preference threshold is undefined for this configuration.

    ``always_superior`` tells whether the asynchronous scheme wins for every
    spatial-correlation value (True), never wins (False).
    """

    def __init__(self, message, always_superior):
        super().__init__(message)
        self.always_superior = always_superior


class ScaleLimitError(InvalidConfigError):
    """A sampled-field run would need an intractably large covariance."""
