"""Exception types shared across rootlab."""


class RootlabError(Exception):
    """Base class for all rootlab errors."""


class DimensionMismatch(RootlabError, ValueError):
    """Two tuples (or curves) of different degree were combined."""


class GridMismatch(RootlabError, ValueError):
    """Two sampled curves do not live on the same grid."""


class NonConvergence(RootlabError, ArithmeticError):
    """The root solver did not reach its tolerance within the iteration budget."""


class RefinementLimit(RootlabError, ArithmeticError):
    """Adaptive step bisection exhausted its budget during tracking."""


class InsufficientData(RootlabError, ValueError):
    """Requested derivative order is not available and FD fallback is disabled."""
