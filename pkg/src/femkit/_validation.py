"""Input validation helpers shared across modules."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError


def check_matrix(x, name: str, ndim: int = 2, dtype=np.float64) -> np.ndarray:
    """Coerce ``x`` to a C-contiguous float array of the given rank."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    """Reject NaN/Inf, reporting the first offending index."""
    bad = ~np.isfinite(arr)
    if bad.any():
        idx = np.argwhere(bad)[0]
        where = ", ".join(str(i) for i in idx)
        raise ValidationError(f"{name} contains a non-finite value at index ({where})")
    return arr


def check_vector(x, name: str, length: int | None = None) -> np.ndarray:
    arr = check_matrix(x, name, ndim=1)
    if length is not None and arr.shape[0] != length:
        raise ValidationError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def check_positive(value: float, name: str, strict: bool = True) -> float:
    value = float(value)
    if strict and not value > 0:
        raise ValidationError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return value


def readonly(arr: np.ndarray) -> np.ndarray:
    """Return ``arr`` flagged read-only (shared, not copied)."""
    arr.flags.writeable = False
    return arr
