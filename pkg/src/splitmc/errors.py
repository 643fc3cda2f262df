"""Exception hierarchy shared across the package."""


class SplitMCError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(SplitMCError):
    """An input vector or matrix has an incompatible shape."""


class SingularModel(SplitMCError):
    """A quantity requiring aggregate strong convexity was requested but m_U <= 0."""


class SingularGram(SplitMCError):
    """The stacked coupling matrix does not have full row rank."""


class NotStronglyConvex(SplitMCError):
    """Requested operation needs strictly positive strong convexity."""


class NotSmooth(SplitMCError):
    """Requested operation needs a finite gradient-Lipschitz constant."""


class NotCentered(SplitMCError):
    """Factor gradients do not vanish at the global minimizer."""


class NonConvergence(SplitMCError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class AcceptanceStall(SplitMCError):
    """Rejection sampling exceeded its proposal cap; certified constants are suspect."""


class QuadratureFailure(SplitMCError):
    """Adaptive quadrature could not meet the requested tolerance."""


class NonSymmetric(SplitMCError):
    """A symmetric matrix argument was not symmetric."""


class UnsupportedModel(SplitMCError):
    """The operation only supports specific closed-form model families."""


class EpsilonOutOfRange(SplitMCError):
    """Precision parameter must satisfy 0 < eps <= 1."""


class TooFewSamples(SplitMCError):
    """Not enough samples for the requested histogram resolution."""
