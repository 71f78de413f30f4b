"""Small input-checking helpers used by the estimators and functional API."""

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .exceptions import ValidationError


def _array(x, **kwargs):
    # re-raise sklearn's ValueError as our ValidationError
    try:
        return check_array(x, dtype=np.float64, **kwargs)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _same_length(*arrays):
    try:
        check_consistent_length(*arrays)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def check_wavelength_pairs(X):
    """Return ``X`` as a float array of shape (n, 2)."""
    X = _array(X, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValidationError(f"expected (n, 2) wavelength pairs, got shape {X.shape}")
    return X


def check_angles(X):
    """Accept angles (deg) as shape (n,) or (n, 1) and return a 1-D array."""
    X = _array(X, ensure_2d=False)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ValidationError(f"expected 1-D angle array, got shape {X.shape}")
    return X


def check_targets(X, y, sample_weight=None, allow_nan=False):
    """Validate targets (NaN allowed on request, for masked pixels) and weights."""
    y = _array(y, ensure_2d=False, ensure_all_finite="allow-nan" if allow_nan else True)
    if sample_weight is None:
        _same_length(X, y)
        return y, None
    sample_weight = _array(sample_weight, ensure_2d=False)
    _same_length(X, y, sample_weight)
    if np.any(sample_weight < 0):
        raise ValidationError("sample weights must be non-negative")
    return y, sample_weight


def check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def check_fraction(name, value):
    """Fraction in [0, 1)."""
    if not np.isfinite(value) or not 0.0 <= value < 1.0:
        raise ValidationError(f"{name} must lie in [0, 1), got {value!r}")
    return float(value)
