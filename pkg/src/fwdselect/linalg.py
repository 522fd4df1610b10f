"""Dense kernels for repeated least squares on growing column sets.

The selection loop refits a model every time a column is appended, so the
Gram matrix of the working columns is factorized incrementally: one
`chol_append` per accepted column instead of a full factorization per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NearSingular, ZeroColumn

# Relative floor for accepting a new Cholesky pivot: the squared pivot must
# exceed PIVOT_FLOOR times the incoming diagonal entry.
PIVOT_FLOOR = 1e-10


@dataclass
class CholeskyState:
    """Lower-triangular factor of the Gram matrix of an ordered column set.

    ``lower @ lower.T`` reconstructs the Gram submatrix over ``indices``.
    An empty state (``dim == 0``) is the valid starting point.
    """

    lower: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    indices: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def chol_empty() -> CholeskyState:
    return CholeskyState()


def chol_append(
    chol: CholeskyState,
    cross: np.ndarray,
    diag: float,
    index: int = -1,
) -> CholeskyState:
    """Extend the factor by one column of the Gram matrix.

    Parameters
    ----------
    chol : CholeskyState
        Factor of the current k-column Gram matrix.
    cross : ndarray, shape (k,)
        Inner products of the new column with the current columns.
    diag : float
        Squared norm of the new column.
    index : int
        Column label recorded in the new state.

    Returns
    -------
    CholeskyState
        Factor of the (k+1)-column Gram matrix.  The input state is not
        modified.

    Raises
    ------
    NearSingular
        If the squared pivot falls at or below ``PIVOT_FLOOR * diag``; the
        caller should skip the offending column.
    """
    cross = np.asarray(cross, dtype=float)
    k = chol.dim
    if cross.shape != (k,):
        raise ValueError(f"cross has shape {cross.shape}, expected ({k},)")
    if diag <= 0:
        raise NearSingular(f"non-positive diagonal entry {diag!r}")
    if k == 0:
        ell = np.zeros(0)
        pivot_sq = float(diag)
    else:
        ell = solve_triangular(chol.lower, cross, lower=True)
        pivot_sq = float(diag - ell @ ell)
    if pivot_sq <= PIVOT_FLOOR * diag:
        raise NearSingular(
            f"pivot^2 {pivot_sq:.3e} at or below floor {PIVOT_FLOOR * diag:.3e}"
        )
    out = np.zeros((k + 1, k + 1))
    out[:k, :k] = chol.lower
    out[k, :k] = ell
    out[k, k] = np.sqrt(pivot_sq)
    return CholeskyState(out, chol.indices + (index,))


def solve_spd(chol: CholeskyState, rhs: np.ndarray) -> np.ndarray:
    """Solve ``Gram @ x = rhs`` given the factor of the Gram matrix.

    ``rhs`` may be a vector of length ``dim`` or a matrix with ``dim`` rows;
    the solution has the same shape.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != chol.dim:
        raise ValueError(f"rhs has leading dimension {rhs.shape[0]}, expected {chol.dim}")
    if chol.dim == 0:
        return rhs.copy()
    half = solve_triangular(chol.lower, rhs, lower=True)
    return solve_triangular(chol.lower.T, half, lower=False)


def standardize_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale each column to unit empirical second moment.

    Returns the rescaled matrix and the vector of applied divisors
    ``scales[j] = sqrt(mean(X[:, j]**2))``, so original-scale coefficients
    are recovered as ``coef / scales``.

    Raises
    ------
    ZeroColumn
        If some column is identically zero.
    """
    X = np.asarray(X, dtype=float)
    second = np.mean(X * X, axis=0)
    if np.any(second <= 0.0):
        bad = int(np.flatnonzero(second <= 0.0)[0])
        raise ZeroColumn(f"column {bad} has zero second moment")
    scales = np.sqrt(second)
    return X / scales, scales
