"""Exception types shared across the package."""


class DrclipError(Exception):
    """Base class for all domain errors raised by this package."""


class MissingColumn(DrclipError):
    """A column named in the schema is absent from the CSV header."""


class BadValue(DrclipError):
    """A cell is non-numeric, non-finite, or a response/treatment is not 0/1."""


class InconsistentRow(DrclipError):
    """A row claims an observed outcome (r=1) but the outcome cell is empty."""


class EmptyArm(DrclipError):
    """Treatment or control arm contains zero units."""


class DegenerateSample(DrclipError):
    """A simulated sample came out with all units labeled or all unlabeled."""


class RankDeficient(DrclipError):
    """Design matrix (plus intercept) does not have full column rank."""


class TooFewRows(DrclipError):
    """Fewer rows than the fitter needs for the requested number of columns."""


class NoVariation(DrclipError):
    """Binary response has a single class; logistic fit is undefined."""


class Separation(DrclipError):
    """Logistic coefficients diverged past the cap; data are (quasi-)separated."""


class NotConverged(DrclipError):
    """Iterative fit exhausted max_iter without meeting the tolerance."""


class DimensionMismatch(DrclipError):
    """Prediction input does not match the fitted model's dimensions."""


class MaskedAccess(DrclipError):
    """An estimator tried to read an outcome cell that is masked (r=0)."""


class NonPositivePropensity(DrclipError):
    """A propensity value <= 0 would produce an infinite inverse weight."""


class FactorizationFailure(DrclipError):
    """Covariance factorization failed even after the jitter retry."""


class NoData(DrclipError):
    """No usable (non-flagged) records to compute metrics from."""
