"""Input validation helpers used by the public API."""

from __future__ import annotations

import numpy as np


def as_complex_array(x, ndim: int | None = None, name: str = "array") -> np.ndarray:
    """Cast input to a complex128 ndarray and check its dimensionality.

    Parameters
    ----------
    x : array_like
        Input data.
    ndim : int, optional
        Required number of dimensions. Unchecked when None.
    name : str
        Name used in error messages.

    Returns
    -------
    np.ndarray
        The input as a complex128 array (copy only when needed).
    """
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.number):
        raise ValueError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(np.complex128, copy=False)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def check_finite(x: np.ndarray, name: str = "array") -> np.ndarray:
    """Raise ValueError if any entry is NaN or infinite."""
    if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def as_positions(x, name: str = "positions") -> np.ndarray:
    """Cast to a float (n, 2) coordinate array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def require_fitted(estimator, attribute: str) -> None:
    """Raise RuntimeError if a fitted attribute is missing on the estimator."""
    if not hasattr(estimator, attribute):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
