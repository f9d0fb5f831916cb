"""Input validation helpers shared by the estimator facade and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .tensor import DenseTensor

__all__ = ["check_tensor", "check_alpha_array", "check_positive", "check_choice"]


def check_tensor(x, name: str = "X", min_order: int = 1) -> DenseTensor:
    """Coerce an array-like to a DenseTensor and enforce a minimum order."""
    t = x if isinstance(x, DenseTensor) else DenseTensor(np.asarray(x, dtype=np.float64))
    if t.order < min_order:
        raise InvalidInput(f"{name} must have order >= {min_order}, got {t.order}")
    return t


def check_alpha_array(alphas, dimension: int) -> np.ndarray:
    """Coerce parameter queries to a 2-D (count, dimension) float array."""
    a = np.asarray(alphas, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != dimension:
        raise DimensionMismatch(
            f"expected parameter rows of length {dimension}, got shape {a.shape}"
        )
    if not np.all(np.isfinite(a)):
        raise InvalidInput("parameter values must be finite")
    return a


def check_positive(value, name: str, integer: bool = False):
    """Require a positive (and optionally integral) scalar."""
    if integer:
        if int(value) != value or value < 1:
            raise InvalidInput(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise InvalidInput(f"{name} must be positive, got {value!r}")
    return v


def check_choice(value, name: str, options) -> str:
    if value not in options:
        raise InvalidInput(f"{name} must be one of {sorted(options)}, got {value!r}")
    return value
