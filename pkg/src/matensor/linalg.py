"""Dense complex linear-algebra kernels shared across the package.

Conventions pinned here and relied on everywhere else:

* ``vec`` stacks columns (column-major); ``unvec`` inverts it. This makes
  ``vec(A @ X @ B.T) = kronecker(B, A) @ vec(X)`` hold exactly.
* ``unfold(t, mode)`` uses 1-based modes. Columns of the unfolding enumerate
  the remaining modes with the earlier mode varying fastest, so a rank-R
  tensor with factors (U1, U2, U3) satisfies
  ``unfold(t, 1) = U1 @ khatri_rao(U3, U2).T`` and cyclically for the others.
* ``pseudo_inverse`` and ``least_squares`` discard singular values below
  ``rtol`` times the largest one, with ``rtol = 1e-12`` by default. The loose
  cutoff keeps the solvers stable on the near-rank-deficient Khatri-Rao
  systems that alternating least squares produces early on.
"""

from __future__ import annotations

import numpy as np

from .validation import as_complex_array, check_finite

DEFAULT_RTOL = 1e-12


def vec(a) -> np.ndarray:
    """Stack the columns of a matrix into a vector."""
    a = as_complex_array(a, ndim=2, name="matrix")
    return a.reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a matrix of known shape."""
    v = as_complex_array(v, ndim=1, name="vector")
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape length {v.size} into ({rows}, {cols})")
    return v.reshape(rows, cols, order="F")


def kronecker(a, b) -> np.ndarray:
    """Kronecker product with complex dtype."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    return np.kron(a, b)


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product.

    Parameters
    ----------
    a : (m, k) array_like
    b : (n, k) array_like

    Returns
    -------
    (m * n, k) np.ndarray
        Column ``j`` equals ``kronecker(a[:, j], b[:, j])``.
    """
    a = as_complex_array(a, ndim=2, name="a")
    b = as_complex_array(b, ndim=2, name="b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column counts must match, got {a.shape[1]} and {b.shape[1]}"
        )
    m, k = a.shape
    n = b.shape[0]
    return (a[:, None, :] * b[None, :, :]).reshape(m * n, k)


def pseudo_inverse(a, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff."""
    a = as_complex_array(a, ndim=2, name="matrix")
    check_finite(a, "matrix")
    return np.linalg.pinv(a, rcond=rtol)


def least_squares(a, y, rtol: float = DEFAULT_RTOL, return_rank: bool = False):
    """Minimum-norm least-squares solution of ``a @ x = y``.

    Parameters
    ----------
    a : (m, n) array_like
    y : (m,) or (m, p) array_like
    rtol : float
        Relative singular-value cutoff.
    return_rank : bool
        When True, also return the effective rank used by the solver.
    """
    a = as_complex_array(a, ndim=2, name="a")
    y = as_complex_array(y, name="y")
    if y.ndim not in (1, 2):
        raise ValueError(f"y must be a vector or matrix, got shape {y.shape}")
    if y.shape[0] != a.shape[0]:
        raise ValueError(f"row counts must match, got {a.shape[0]} and {y.shape[0]}")
    check_finite(a, "a")
    check_finite(y, "y")
    solution, _, rank, _ = np.linalg.lstsq(a, y, rcond=rtol)
    if return_rank:
        return solution, rank
    return solution


def unfold(t, mode: int) -> np.ndarray:
    """Matricize a 3-way tensor along the given 1-based mode."""
    t = as_complex_array(t, ndim=3, name="tensor")
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2, or 3, got {mode}")
    return np.moveaxis(t, mode - 1, 0).reshape(t.shape[mode - 1], -1, order="F")


def fold(m, mode: int, shape: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of known shape."""
    m = as_complex_array(m, ndim=2, name="matrix")
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2, or 3, got {mode}")
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3:
        raise ValueError(f"shape must have three entries, got {shape}")
    rest = tuple(s for i, s in enumerate(shape) if i != mode - 1)
    if m.shape != (shape[mode - 1], rest[0] * rest[1]):
        raise ValueError(
            f"matrix shape {m.shape} does not match tensor shape {shape} "
            f"unfolded along mode {mode}"
        )
    moved = m.reshape((shape[mode - 1],) + rest, order="F")
    return np.moveaxis(moved, 0, mode - 1)
