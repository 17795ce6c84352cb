"""Small argument checks used across the package."""
import math

import numpy as np

from .exceptions import DomainError


def check_positive(name, value):
    if not (np.all(np.isfinite(value)) and np.all(np.asarray(value) > 0)):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


def check_nonnegative(name, value):
    if not (np.all(np.isfinite(value)) and np.all(np.asarray(value) >= 0)):
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def check_finite(name, value):
    if isinstance(value, float) and math.isnan(value):
        raise DomainError(f"{name} must not be NaN")
    return value


def check_axis(name, axis, min_size=1):
    """Return ``axis`` as a float 1-D array, requiring strict monotone increase."""
    arr = as_1d(name, axis)
    if arr.size < min_size:
        raise DomainError(f"{name} needs at least {min_size} points, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise DomainError(f"{name} must be strictly increasing")
    return arr


def as_1d(name, values, dtype=float):
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise DomainError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr
