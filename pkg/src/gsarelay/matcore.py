"""
Complex dense matrix kernel.

Thin, checked wrappers around numpy/LAPACK for the handful of primitives
the alignment constructions need: SVD-based null space and rank, checked
inversion and seeded complex Gaussian sampling.  Matrices are plain
``numpy.ndarray`` objects with ``complex128`` dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SingularMatrixError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "as_cmatrix",
    "null_space",
    "rank",
    "invert",
    "sample_gaussian",
    "max_abs",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds.

    Parameters
    ----------
    rank_tol : float
        Singular values below ``rank_tol * sigma_max`` count as zero.
    verify_tol : float
        Max-abs-entry threshold used by every equality check.
    """

    rank_tol: float = 1e-10
    verify_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_tol", "verify_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidInputError(f"{name} must lie in (0, 1), got {value}")


DEFAULT_TOL = Tolerance()


def as_cmatrix(m) -> np.ndarray:
    """Return `m` as a finite 2-D complex128 array or raise InvalidInputError."""
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix contains NaN or Inf entries")
    return arr


def _singular_values(arr):
    if arr.size == 0:
        return np.zeros(0)
    return np.linalg.svd(arr, compute_uv=False)


def _numerical_rank(s, tol):
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_tol * s[0]))


def rank(m, tol: Tolerance = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol.rank_tol * sigma_max``."""
    return _numerical_rank(_singular_values(as_cmatrix(m)), tol)


def null_space(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``{x : m @ x = 0}``.

    Parameters
    ----------
    m : array_like, shape (r, c)
    tol : Tolerance

    Returns
    -------
    numpy.ndarray, shape (c, c - rank(m))
        Columns are orthonormal.  A matrix with zero rows has the whole
        space as kernel, so the identity is returned.
    """
    arr = as_cmatrix(m)
    rows, cols = arr.shape
    if rows == 0 or cols == 0:
        return np.eye(cols, dtype=np.complex128)
    _, s, vh = np.linalg.svd(arr, full_matrices=True)
    r = _numerical_rank(s, tol)
    return vh[r:].conj().T


def invert(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Checked inverse of a square full-rank matrix.

    Raises
    ------
    SingularMatrixError
        If `m` is not square, is rank deficient, or the residual
        ``|m @ inv - I|`` exceeds ``tol.verify_tol``.
    """
    arr = as_cmatrix(m)
    n, c = arr.shape
    if n != c:
        raise SingularMatrixError(f"cannot invert non-square {n}x{c} matrix")
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if rank(arr, tol) < n:
        raise SingularMatrixError(f"{n}x{n} matrix is rank deficient")
    inv = np.linalg.inv(arr)
    residual = max_abs(arr @ inv - np.eye(n))
    if residual > tol.verify_tol:
        raise SingularMatrixError(
            f"inverse residual {residual:.3e} exceeds {tol.verify_tol:.1e}"
        )
    return inv


def sample_gaussian(rows: int, cols: int, rng_seed) -> np.ndarray:
    """I.i.d. circularly-symmetric complex Gaussian matrix, unit variance.

    `rng_seed` is anything ``numpy.random.default_rng`` accepts (an int or a
    sequence of ints).  The generator is PCG64, whose stream is stable
    across numpy releases and platforms.
    """
    if rows < 0 or cols < 0:
        raise InvalidInputError("matrix dimensions must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) * np.sqrt(0.5)


def max_abs(m) -> float:
    """Largest entry magnitude; 0.0 for empty input."""
    arr = np.asarray(m)
    return float(np.max(np.abs(arr))) if arr.size else 0.0
