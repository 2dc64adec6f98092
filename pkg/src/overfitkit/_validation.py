"""Input validation helpers shared across the package."""

from __future__ import annotations

from typing import Any

import numpy as np

__all__ = [
    "as_float_vector",
    "as_float_matrix",
    "check_positive",
    "check_nonnegative",
    "check_finite_scalar",
]


def as_float_vector(values: Any, name: str, *, min_len: int = 0) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_len:
        raise ValueError(f"{name} needs at least {min_len} values, got {arr.size}")
    if arr.size and not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValueError(f"{name} contains a non-finite value at index {bad}")
    return arr


def as_float_matrix(values: Any, name: str, *, min_rows: int = 0) -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_finite_scalar(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_positive(value: float, name: str) -> float:
    value = check_finite_scalar(value, name)
    if value <= 0:
        raise ValueError(f"{name} must be strictly positive, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = check_finite_scalar(value, name)
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value
