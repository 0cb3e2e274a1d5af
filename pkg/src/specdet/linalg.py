"""Dense symmetric positive-definite helpers.

Solves go through a Cholesky factor; explicit inverses are only formed by
:func:`spd_inverse`, :func:`sherman_morrison_downdate` and
:func:`augmented_inverse`, which exist so the rank-one and block-inverse
identities behind the matched-filter/augmented-CEM equivalence can be
checked entry by entry.

No regularization happens here. A matrix that is singular to working
precision raises :class:`~specdet.errors.NotPositiveDefinite`.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from specdet.errors import DegenerateMean, DimensionMismatch, NotPositiveDefinite

#: Smallest admissible value of ``1 - m^T R^-1 m``.
MEAN_TOLERANCE = 1e-12


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(A + A^T) / 2``; the result is bitwise symmetric."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def pivot_tolerance(a: np.ndarray) -> float:
    """Scale-aware pivot floor: ``order * eps * max(diag(A))``."""
    return a.shape[0] * np.finfo(float).eps * float(np.max(np.diag(a)))


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix.

    Raises
    ------
    NotPositiveDefinite
        If factorization breaks down or any pivot ``L[i, i]**2`` is at or
        below :func:`pivot_tolerance`.
    """
    a = _as_square(a)
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    tol = pivot_tolerance(a)
    if tol <= 0.0:
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    try:
        lower = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(lower) ** 2
    k = int(np.argmin(pivots))
    if pivots[k] <= tol:
        raise NotPositiveDefinite(
            f"pivot {k} is {pivots[k]:.3e}, at or below tolerance {tol:.3e}"
        )
    return lower


def spd_solve(a, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A``.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    a = _as_square(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} != matrix order {a.shape[0]}")
    lower = cholesky(a)
    return scipy.linalg.cho_solve((lower, True), b, check_finite=False)


def spd_inverse(a) -> np.ndarray:
    a = _as_square(a)
    return symmetrize(spd_solve(a, np.eye(a.shape[0])))


def _downdate_terms(r_inv, m) -> tuple[np.ndarray, np.ndarray, float]:
    r_inv = _as_square(r_inv)
    m = np.asarray(m, dtype=float)
    if m.shape != (r_inv.shape[0],):
        raise DimensionMismatch(f"mean length {m.shape} != matrix order {r_inv.shape[0]}")
    r_inv_m = r_inv @ m
    gap = 1.0 - float(m @ r_inv_m)
    if not gap > MEAN_TOLERANCE:
        raise DegenerateMean(
            f"1 - m^T R^-1 m = {gap:.3e}; covariance R - m m^T is singular"
        )
    return r_inv, r_inv_m, 1.0 / gap


def sherman_morrison_downdate(r_inv, m) -> np.ndarray:
    """Inverse of ``R - m m^T`` from ``R^-1`` by the Sherman-Morrison formula.

    Computes ``R^-1 + b1 (R^-1 m)(R^-1 m)^T`` with ``b1 = 1 / (1 - m^T R^-1 m)``.

    Parameters
    ----------
    r_inv : (L, L) array
        Inverse of the sample correlation matrix.
    m : (L,) array
        Mean vector.

    Raises
    ------
    DegenerateMean
        If ``1 - m^T R^-1 m <= MEAN_TOLERANCE``.
    """
    r_inv, r_inv_m, b1 = _downdate_terms(r_inv, m)
    return symmetrize(r_inv + b1 * np.outer(r_inv_m, r_inv_m))


def augmented_inverse(r_inv, m) -> np.ndarray:
    """Inverse of the bordered matrix ``[[R, m], [m^T, 1]]`` by blocks.

    The top-left block is the Sherman-Morrison downdate of ``R^-1``, the
    border is ``-b1 R^-1 m`` and the corner is ``b1``.
    """
    r_inv, r_inv_m, b1 = _downdate_terms(r_inv, m)
    n = r_inv.shape[0]
    out = np.empty((n + 1, n + 1))
    out[:n, :n] = r_inv + b1 * np.outer(r_inv_m, r_inv_m)
    out[:n, n] = -b1 * r_inv_m
    out[n, :n] = -b1 * r_inv_m
    out[n, n] = b1
    return symmetrize(out)


def bordered(r, m) -> np.ndarray:
    """Assemble ``[[R, m], [m^T, 1]]``."""
    r = _as_square(r)
    m = np.asarray(m, dtype=float)
    n = r.shape[0]
    out = np.empty((n + 1, n + 1))
    out[:n, :n] = r
    out[:n, n] = m
    out[n, :n] = m
    out[n, n] = 1.0
    return out
