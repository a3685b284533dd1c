"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import os

import numpy as np
from sklearn.utils.validation import check_array

from .mdp import TabularMDP, mdp_from_dict, read_mdp


def check_level(value, name: str) -> float:
    """A probability strictly inside (0, 1)."""
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
    return v


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_mdp(X) -> TabularMDP:
    """Accept a TabularMDP, its dict form, or a path to an instance file."""
    if isinstance(X, TabularMDP):
        return X.check()
    if isinstance(X, dict):
        return mdp_from_dict(X)
    if isinstance(X, (str, os.PathLike)):
        return read_mdp(X)
    raise TypeError(f"expected a TabularMDP, dict or path, got {type(X).__name__}")


def check_stage_state(X, horizon: int, num_states: int) -> np.ndarray:
    """Validate an ``(n, 2)`` integer array of ``(stage, state)`` queries."""
    X = check_array(X, dtype=np.int64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected (stage, state) pairs, got {X.shape[1]} columns")
    h, s = X[:, 0], X[:, 1]
    if np.any((h < 0) | (h >= horizon)):
        raise ValueError(f"stage index out of range [0, {horizon})")
    if np.any((s < 0) | (s >= num_states)):
        raise ValueError(f"state index out of range [0, {num_states})")
    return X
