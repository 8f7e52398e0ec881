"""Small input-checking helpers shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np


def check_pairs(X, n_users=None, n_items=None):
    """Validate an ``(n, 2)`` array of ``(user, item)`` index pairs.

    Returns the user and item columns as contiguous int64 arrays.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of (user, item) pairs, got shape {X.shape}")
    if X.size and not np.issubdtype(X.dtype, np.integer):
        if not np.all(np.equal(np.mod(X, 1), 0)):
            raise ValueError("user and item indices must be integers")
    users = np.ascontiguousarray(X[:, 0], dtype=np.int64)
    items = np.ascontiguousarray(X[:, 1], dtype=np.int64)
    if users.size and (users.min() < 0 or items.min() < 0):
        raise ValueError("user and item indices must be non-negative")
    if n_users is not None and users.size and users.max() >= n_users:
        raise ValueError(f"user index {users.max()} out of range for n_users={n_users}")
    if n_items is not None and items.size and items.max() >= n_items:
        raise ValueError(f"item index {items.max()} out of range for n_items={n_items}")
    return users, items


def check_targets(y, n):
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (n,):
        raise ValueError(f"expected {n} target values, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("target values must be finite")
    return y


def check_unit_interval(name, value):
    if not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_positive_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_non_negative(name, value):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite number >= 0, got {value!r}")
    return float(value)
