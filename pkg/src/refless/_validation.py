"""Input validation helpers, in the spirit of sklearn.utils.validation."""

from __future__ import annotations

import numpy as np


def check_matrix(X, name: str = "X", dtype=np.float64) -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_vector(v, name: str = "v", dtype=np.float64) -> np.ndarray:
    """Coerce to a 1-D float array with finite entries."""
    v = np.asarray(v, dtype=dtype)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def check_paired_matrices(X, Y, x_name: str = "X", y_name: str = "Y"):
    """Validate two row-aligned matrices of equal shape."""
    X = check_matrix(X, x_name)
    Y = check_matrix(Y, y_name)
    if X.shape != Y.shape:
        raise ValueError(
            f"{x_name} and {y_name} must have identical shapes, "
            f"got {X.shape} and {Y.shape}"
        )
    return X, Y


def check_weights(w, name: str = "weights", total: float = 1.0, tol: float = 1e-6) -> np.ndarray:
    """Validate a nonnegative weight vector summing to `total` within `tol`."""
    w = check_vector(w, name)
    if w.size == 0:
        raise ValueError(f"{name} is empty")
    if np.any(w < 0):
        raise ValueError(f"{name} contains negative entries")
    s = float(w.sum())
    if abs(s - total) > tol:
        raise ValueError(f"{name} sums to {s!r}, expected {total} within {tol}")
    return w


def check_same_length(a, b, a_name: str = "a", b_name: str = "b"):
    a = check_vector(a, a_name)
    b = check_vector(b, b_name)
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"{a_name} and {b_name} must have equal length, "
            f"got {a.shape[0]} and {b.shape[0]}"
        )
    return a, b
