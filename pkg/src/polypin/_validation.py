"""Small argument-checking helpers shared by the modules and estimators."""

import numbers

import numpy as np

from .exceptions import DomainError


def check_scalar(value, name, *, kind=numbers.Real, lower=None, upper=None,
                 lower_inclusive=True, upper_inclusive=True):
    """Validate a scalar and return it converted to ``float`` or ``int``."""
    if isinstance(value, bool) or not isinstance(value, kind):
        raise DomainError(f"{name} must be {kind.__name__}, got {type(value).__name__}")
    if isinstance(value, numbers.Real) and not np.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if lower is not None:
        bad = value < lower if lower_inclusive else value <= lower
        if bad:
            op = ">=" if lower_inclusive else ">"
            raise DomainError(f"{name} must be {op} {lower}, got {value!r}")
    if upper is not None:
        bad = value > upper if upper_inclusive else value >= upper
        if bad:
            op = "<=" if upper_inclusive else "<"
            raise DomainError(f"{name} must be {op} {upper}, got {value!r}")
    if kind is numbers.Integral:
        return int(value)
    return float(value)


def check_positive(value, name):
    return check_scalar(value, name, lower=0.0, lower_inclusive=False)


def check_int(value, name, lower=None, upper=None):
    return check_scalar(value, name, kind=numbers.Integral, lower=lower, upper=upper)


def check_finite_array(x, name, ndim=None):
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise DomainError(f"cannot build a random generator from {seed!r}")
