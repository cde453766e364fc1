"""Input validation helpers.

scikit-learn's ``check_array`` rejects complex input, so complex vectors are
checked here instead.
"""
from __future__ import annotations

import numbers

import numpy as np


def as_complex_vector(v, length=None, name="input") -> np.ndarray:
    """Return ``v`` as a finite 1-D complex128 array, optionally of fixed length."""
    arr = np.asarray(v)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric")
    arr = arr.astype(complex, copy=False)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must be non-empty")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_complex_matrix(X, shape=None, name="X") -> np.ndarray:
    arr = np.asarray(X).astype(complex, copy=False)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_observations(X, length=None, name="X") -> np.ndarray:
    """Coerce one observation ``(Q,)`` or a stack ``(n, Q)`` into a 2-D array."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    return as_complex_matrix(arr, shape=None if length is None else (arr.shape[0], length), name=name)


def check_positive(value, name, allow_zero=False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value


def check_positive_int(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
