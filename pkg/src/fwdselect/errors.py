"""Exception and warning types shared across the package."""


class EstimationError(Exception):
    """Base class for numerical failures in estimation routines."""


class NearSingular(EstimationError):
    """A Gram (sub)matrix is numerically singular at the working floor."""


class ZeroColumn(EstimationError):
    """A design column is identically zero and cannot be standardized."""


class DegenerateResidualizedColumn(EstimationError):
    """The residualized candidate column has (numerically) zero norm."""


class DegenerateWeightedNorm(EstimationError):
    """The residual-weighted quadratic form in the threshold correction is zero."""


class SingularDesign(EstimationError):
    """An instrumental-variables design matrix is not invertible."""


class NoConvergenceWarning(UserWarning):
    """Coordinate descent hit the sweep cap before reaching its tolerance."""


class WeakInstrumentWarning(UserWarning):
    """First-stage instrument t-statistic is below 1 in absolute value."""
