"""Input validation helpers used across estimators and stores."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroVector


def check_vector(v, dim=None, name="vector"):
    """Coerce to a finite 1-D float64 array, optionally checking dimension."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_nonzero(v, name="vector"):
    """Reject all-zero vectors (cosine undefined)."""
    if not np.any(v):
        raise ZeroVector(f"{name} is all zeros")
    return v


def check_matrix(x, name="X"):
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def fmt_float(x):
    """Exact decimal text for a float64; round-trips bit-exactly via float()."""
    return repr(float(x))


def fmt_vector(v):
    return ",".join(fmt_float(x) for x in v)


def parse_vector(text):
    if not text:
        return None
    return np.array([float(t) for t in text.split(",")], dtype=np.float64)
