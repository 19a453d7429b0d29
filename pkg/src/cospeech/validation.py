"""Input validation shared by the estimators."""

import numpy as np
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .errors import DegenerateInput


def check_points(X, n_features=None, min_samples=1, name="points"):
    """Validate an (n, d) float array of finite points.

    Too few rows raise :class:`DegenerateInput` rather than sklearn's
    ValueError so callers can catch fitting failures uniformly.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and n_features is not None and X.size == n_features:
        X = X.reshape(1, -1)
    if X.ndim == 2 and X.shape[0] < min_samples:
        raise DegenerateInput(f"{name}: need at least {min_samples} points, got {X.shape[0]}")
    X = check_array(X, dtype=np.float64, ensure_min_samples=0, input_name=name)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"{name}: expected {n_features} columns, got {X.shape[1]}")
    return X


def check_xy(u, v, min_samples=1):
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError("u and v must have the same length")
    X = check_points(np.column_stack([u, v]), 2, min_samples)
    return X[:, 0], X[:, 1]


def check_is_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit() first")
