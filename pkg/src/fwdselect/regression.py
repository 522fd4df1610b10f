"""Least squares, partial regression, and heteroskedasticity-robust tests.

The candidate test for adding column ``j`` to a working set ``S`` is built
from the residualized column (partial regression), a variance estimate that
is either classical or a Huber-Eicker-White sandwich, and a correction
factor ``tau`` that inflates the testing threshold to account for the many
possible selection paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateResidualizedColumn,
    DegenerateWeightedNorm,
    NearSingular,
)
from .linalg import CholeskyState, chol_append, chol_empty, solve_spd

CLASSICAL = "classical"
WHITE = "white"
SE_KINDS = (CLASSICAL, WHITE)

# Forms for the threshold correction factor: "sqrt" combines element-wise
# square roots of the weighted diagonal (the self-normalized bound the
# correction is derived from); "display" uses the raw diagonal entries.
TAU_SQRT = "sqrt"
TAU_DISPLAY = "display"


@dataclass
class RegressionFit:
    """OLS fit of y on the columns listed in ``support`` (in that order)."""

    support: tuple[int, ...]
    coef: np.ndarray
    residuals: np.ndarray
    rss: float


@dataclass
class PartialRegression:
    """Column ``j`` residualized on the columns in ``S``.

    ``beta`` are the projection coefficients of column j on the S columns,
    ``eta = (1, -beta)`` expresses the residualized column in terms of the
    original ones, and ``breve`` holds its values.
    """

    j: int
    S: tuple[int, ...]
    beta: np.ndarray
    eta: np.ndarray
    breve: np.ndarray


@dataclass
class VarianceEstimate:
    v_hat: float
    kind: str
    tau_hat: float


@dataclass
class WeightedGram:
    """Residual-weighted Gram matrix over the columns in ``indices``:
    ``entries[a, b] = sum_i resid_i^2 * X[i, indices[a]] * X[i, indices[b]]``.
    """

    indices: tuple[int, ...]
    entries: np.ndarray


def _gram_cholesky(X: np.ndarray, S: tuple[int, ...]) -> CholeskyState:
    chol = chol_empty()
    cols = list(S)
    for pos, idx in enumerate(cols):
        prev = X[:, cols[:pos]]
        new = X[:, idx]
        chol = chol_append(chol, prev.T @ new, float(new @ new), index=idx)
    return chol


def ols_fit(X: np.ndarray, y: np.ndarray, S) -> RegressionFit:
    """Least squares of ``y`` on the columns ``S`` via normal equations.

    An empty ``S`` gives the null model: empty coefficients, residuals
    equal to ``y``.

    Raises
    ------
    NearSingular
        If the columns in ``S`` are collinear at the pivot floor.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    S = tuple(int(j) for j in S)
    n = y.shape[0]
    if X.shape[0] != n:
        raise ValueError(f"X has {X.shape[0]} rows, y has {n}")
    if len(S) >= n:
        raise NearSingular(f"support size {len(S)} is not below n = {n}")
    if not S:
        return RegressionFit((), np.zeros(0), y.copy(), float(y @ y))
    chol = _gram_cholesky(X, S)
    coef = solve_spd(chol, X[:, S].T @ y)
    residuals = y - X[:, S] @ coef
    return RegressionFit(S, coef, residuals, float(residuals @ residuals))


def fwl_residualize(X: np.ndarray, S, j: int) -> PartialRegression:
    """Project column ``j`` off the columns in ``S``.

    The returned residualized column reproduces the j-th coefficient of
    the joint regression on ``{j} | S``: that coefficient equals
    ``(breve @ y) / (breve @ breve)``.
    """
    X = np.asarray(X, dtype=float)
    S = tuple(int(k) for k in S)
    j = int(j)
    if j in S:
        raise ValueError(f"candidate column {j} is already in the conditioning set")
    col = X[:, j]
    if not S:
        return PartialRegression(j, S, np.zeros(0), np.ones(1), col.copy())
    chol = _gram_cholesky(X, S)
    cross = X[:, S].T @ col
    beta = solve_spd(chol, cross)
    breve = col - X[:, S] @ beta
    # Appending j itself must stay above the pivot floor.
    chol_append(chol, cross, float(col @ col), index=j)
    eta = np.concatenate(([1.0], -beta))
    return PartialRegression(j, S, beta, eta, breve)


def weighted_gram(X: np.ndarray, indices, residuals: np.ndarray) -> WeightedGram:
    """Gram matrix of the ``indices`` columns weighted by squared residuals."""
    X = np.asarray(X, dtype=float)
    indices = tuple(int(k) for k in indices)
    w = np.asarray(residuals, dtype=float) ** 2
    cols = X[:, indices]
    entries = cols.T @ (cols * w[:, None])
    return WeightedGram(indices, entries)


def tau_hat(partial: PartialRegression, wg: WeightedGram, form: str = TAU_SQRT) -> float:
    """Threshold correction factor for the candidate test.

    With ``eta`` the (sign-stripped) representation of the residualized
    column, the factor is

        sum_k |eta_k| sqrt(Psi_kk) / sqrt(eta' Psi eta)

    for the residual-weighted Gram ``Psi``; it is bounded below by 1.
    ``form="display"`` keeps the raw diagonal in the numerator instead of
    its square root, for A/B comparisons only.

    Raises
    ------
    DegenerateWeightedNorm
        If the weighted quadratic form is not positive.
    """
    eta = partial.eta
    psi = wg.entries
    if eta.shape[0] != psi.shape[0]:
        raise ValueError(
            f"eta has length {eta.shape[0]}, weighted Gram is {psi.shape[0]}-dimensional"
        )
    quad = float(eta @ psi @ eta)
    if quad <= 0.0:
        raise DegenerateWeightedNorm(f"weighted quadratic form is {quad!r}")
    abs_eta = np.abs(eta)
    diag = np.diag(psi)
    if form == TAU_SQRT:
        num = float(abs_eta @ np.sqrt(np.maximum(diag, 0.0)))
    elif form == TAU_DISPLAY:
        num = float(abs_eta @ diag)
    else:
        raise ValueError(f"unknown tau form {form!r}")
    return num / math.sqrt(quad)


def variance(
    X: np.ndarray,
    partial: PartialRegression,
    fit: RegressionFit,
    kind: str = WHITE,
    tau_form: str = TAU_SQRT,
) -> VarianceEstimate:
    """Variance of the candidate coefficient from the ``{j} | S`` fit.

    ``fit`` must be the regression on ``{j} | S``, whose residuals supply
    the heteroskedasticity weights.  The sandwich form is

        (breve'breve)^-1 [ sum_i breve_i^2 resid_i^2 ] (breve'breve)^-1

    while the classical form divides the usual unbiased error variance by
    ``breve'breve``.  The correction factor ``tau_hat`` is attached for the
    sandwich kind and pinned to 1 for the classical kind.
    """
    if kind not in SE_KINDS:
        raise ValueError(f"unknown standard-error kind {kind!r}")
    breve = partial.breve
    n = breve.shape[0]
    ss = float(breve @ breve)
    col = np.asarray(X, dtype=float)[:, partial.j]
    if ss <= 1e-10 * float(col @ col):
        raise DegenerateResidualizedColumn(
            f"residualized column {partial.j} has squared norm {ss:.3e}"
        )
    k = len(partial.S) + 1
    if n <= k:
        raise ValueError(f"need n > {k} observations, got {n}")
    resid = fit.residuals
    if kind == CLASSICAL:
        v = (fit.rss / (n - k)) / ss
        return VarianceEstimate(float(v), CLASSICAL, 1.0)
    mid = float(np.sum(breve * breve * resid * resid))
    v = mid / (ss * ss)
    wg = weighted_gram(X, (partial.j,) + partial.S, resid)
    try:
        tau = tau_hat(partial, wg, form=tau_form)
    except DegenerateWeightedNorm:
        # Perfect fit: the statistic is flagged infinite downstream and no
        # correction is meaningful.
        tau = 1.0
    return VarianceEstimate(float(v), WHITE, tau)


def test_statistic(
    X: np.ndarray,
    y: np.ndarray,
    S,
    j: int,
    kind: str = WHITE,
    tau_form: str = TAU_SQRT,
) -> tuple[float, VarianceEstimate]:
    """Absolute t-type statistic for adding column ``j`` to ``S``.

    Returns ``|coef| / sqrt(v_hat)`` together with the variance estimate.
    A zero variance with a nonzero coefficient signals a perfect fit and
    yields ``inf``; a zero coefficient yields 0.  The statistic is invariant
    to positive rescaling of column ``j``.
    """
    S = tuple(int(k) for k in S)
    partial = fwl_residualize(X, S, j)
    fit = ols_fit(X, y, (int(j),) + S)
    var = variance(X, partial, fit, kind=kind, tau_form=tau_form)
    coef = float(fit.coef[0])
    if var.v_hat <= 0.0:
        w = 0.0 if coef == 0.0 else math.inf
    else:
        w = abs(coef) / math.sqrt(var.v_hat)
    return w, var
