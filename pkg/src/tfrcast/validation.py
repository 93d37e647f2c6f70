"""Small input-validation helpers used throughout the package."""
from __future__ import annotations

import math

import numpy as np

from .errors import DataValidationError


def as_square_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a float ndarray and require a square 2-D shape."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DataValidationError(f"{name} must be square 2-D, got shape {arr.shape}")
    return arr


def check_symmetric(matrix: np.ndarray, tol: float = 1e-12, name: str = "matrix") -> None:
    asym = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if asym > tol:
        raise DataValidationError(f"{name} is not symmetric: max |M - M^T| = {asym:.3e} > {tol:.0e}")


def check_finite_array(values: np.ndarray, name: str = "array") -> None:
    if not np.all(np.isfinite(values)):
        raise DataValidationError(f"{name} contains non-finite entries")


def check_finite(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def check_positive(value: float, name: str) -> None:
    check_finite(value, name)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


def check_probability_level(level: float) -> None:
    if not (0.0 < level < 1.0):
        raise ValueError(f"interval level must lie in (0, 1), got {level!r}")


def check_indicator(value: int, name: str) -> None:
    if value not in (0, 1):
        raise DataValidationError(f"{name} must be 0 or 1, got {value!r}")
