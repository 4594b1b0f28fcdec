"""Exception types raised across the package."""


class HmmForgetError(Exception):
    """Base class for all package-specific errors."""


class ModelValidationError(HmmForgetError, ValueError):
    """A model matrix fails a structural requirement."""


class RowSumError(ModelValidationError):
    """A transition or emission row does not sum to 1 within tolerance."""


class ReducibleChainError(ModelValidationError):
    """The transition matrix is not irreducible."""


class PeriodicChainError(ModelValidationError):
    """The transition matrix is irreducible but periodic."""


class StationaryConvergenceError(ModelValidationError):
    """Power iteration failed to reach the requested residual."""


class NotPrimitiveError(HmmForgetError):
    """No power of the restricted transition block is strictly positive."""


class AssumptionAError(HmmForgetError):
    """A cluster satisfying the primitivity assumption is required but missing."""


class ZeroLikelihoodError(HmmForgetError):
    """The observation window has zero likelihood under the model."""


class DimensionMismatchError(HmmForgetError, ValueError):
    """Vector/matrix shapes or time indices do not line up."""


class NotAProbabilityError(HmmForgetError, ValueError):
    """A vector expected to lie on the probability simplex does not."""


class NoValidRowsError(HmmForgetError):
    """Every row of a matrix is zero where at least one stochastic row is needed."""


class DegenerateDataError(HmmForgetError):
    """All sampled distances are exactly zero; forgetting is instantaneous."""


class LengthMismatchError(HmmForgetError, ValueError):
    """Two sequences that must have equal length do not."""


class ConfigParseError(HmmForgetError, ValueError):
    """A model or experiment configuration file cannot be parsed."""
