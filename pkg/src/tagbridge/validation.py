"""Input validation helpers shared by the public API."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def as_float_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array or raise ValidationError."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def as_float_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array or raise ValidationError."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def as_binary_array(x, name: str = "labels") -> np.ndarray:
    arr = np.asarray(x)
    values = np.unique(arr)
    if not np.isin(values, (0, 1)).all():
        raise ValidationError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.int8)


def check_same_length(a, b, what: str = "inputs") -> None:
    if len(a) != len(b):
        raise ValidationError(f"{what} must have equal length, got {len(a)} and {len(b)}")


def check_dimension(actual: int, expected: int, name: str = "vector") -> None:
    if actual != expected:
        raise ValidationError(f"{name}: expected dimension {expected}, got {actual}")


def check_positive(value, name: str) -> None:
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")
