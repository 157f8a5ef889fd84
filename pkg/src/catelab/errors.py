"""Exception types shared across the package."""


class CatelabError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimensionError(CatelabError, ValueError):
    """A dimension argument is outside its admissible range."""


class InvalidDataError(CatelabError, ValueError):
    """Input data violates a structural contract (shapes, binary treatment, ...)."""


class FactorizationError(CatelabError, ValueError):
    """A matrix factorization failed (e.g. covariance not positive semidefinite)."""


class SingularDesignError(CatelabError, ValueError):
    """Least-squares design matrix is rank deficient."""


class EmptyArmError(CatelabError, ValueError):
    """A treatment arm required by an estimator contains no observations."""


class ResourceLimitError(CatelabError, RuntimeError):
    """A sampling or resampling procedure exceeded its configured budget."""


class ReplicateFailureError(CatelabError, RuntimeError):
    """Too many bootstrap replicates failed to fit."""


class UnsupportedModelError(CatelabError, TypeError):
    """An operation was asked to inspect a model kind it does not support."""
