"""Forward selection driven by multiple-testing-corrected t-type tests.

Each step computes the candidate statistic for every column not yet in the
working set, keeps the candidates whose statistic clears the policy's
threshold, and appends the one with the largest statistic.  The loop stops
when no candidate clears the threshold, the step cap is reached, or the fit
becomes perfect.

Three threshold policies are supported:

* ``forward_i``   -- ``c_tau * tau_hat * Phi^-1(1 - alpha/p)``, the most
  conservative rule; ``tau_hat`` is candidate-specific under sandwich
  standard errors and pinned to 1 under classical ones.
* ``forward_ii``  -- the plain Bonferroni rule ``Phi^-1(1 - alpha/p)``.
* ``forward_iii`` -- the step-down rule ``Phi^-1(1 - alpha/(p - |S|))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gauss import gaussian_quantile
from .linalg import PIVOT_FLOOR, chol_append, chol_empty, solve_spd
from .regression import SE_KINDS, TAU_DISPLAY, TAU_SQRT, WHITE, ols_fit

FORWARD_I = "forward_i"
FORWARD_II = "forward_ii"
FORWARD_III = "forward_iii"
POLICIES = (FORWARD_I, FORWARD_II, FORWARD_III)

# Working fits with relative residual sum of squares at or below this are
# treated as perfect.
PERFECT_FIT_RTOL = 1e-12


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.05
    c_tau: float = 1.1
    policy: str = FORWARD_I
    se_kind: str = WHITE
    max_steps: int | None = None
    include_intercept: bool = False
    tau_form: str = TAU_SQRT

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.c_tau <= 1.0:
            raise ValueError(f"c_tau must exceed 1, got {self.c_tau!r}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.se_kind not in SE_KINDS:
            raise ValueError(f"unknown standard-error kind {self.se_kind!r}")
        if self.tau_form not in (TAU_SQRT, TAU_DISPLAY):
            raise ValueError(f"unknown tau form {self.tau_form!r}")


@dataclass
class StepRecord:
    index: int
    w: float
    threshold: float
    n_passing: int
    skipped: tuple[int, ...] = ()


@dataclass
class SelectionTrace:
    steps: list[StepRecord]
    support: tuple[int, ...]
    reason: str  # "no-candidate" | "max-steps" | "perfect-fit"
    n: int
    p: int
    config: SelectionConfig
    degenerate_columns: tuple[int, ...] = ()


@dataclass
class SelectedModel:
    support: tuple[int, ...]
    coef: np.ndarray
    fitted: np.ndarray
    intercept: float = 0.0


def default_max_steps(n: int, p: int) -> int:
    """Step cap keeping every candidate fit well-posed with df >= 1."""
    return max(0, min(n - 2, p))


def threshold(config: SelectionConfig, p: int, current_size: int, tau: float = 1.0) -> float:
    """Testing threshold for the configured policy.

    ``tau`` enters multiplicatively under ``forward_i`` and is ignored by
    the other policies.
    """
    if p < 1:
        raise ValueError(f"need at least one candidate column, got p = {p}")
    if current_size >= p:
        raise ValueError(f"working set of size {current_size} exhausts p = {p} columns")
    if config.policy == FORWARD_I:
        return config.c_tau * tau * gaussian_quantile(1.0 - config.alpha / p)
    if config.policy == FORWARD_II:
        return gaussian_quantile(1.0 - config.alpha / p)
    return gaussian_quantile(1.0 - config.alpha / (p - current_size))


def _prepare(X, y, config):
    """Demean (when an intercept is requested) and rescale columns to unit
    empirical second moment; degenerate columns are flagged, not rescaled."""
    if config.include_intercept:
        X = X - X.mean(axis=0)
        y = y - y.mean()
    second = np.mean(X * X, axis=0)
    active = second > PIVOT_FLOOR
    scales = np.where(active, np.sqrt(np.maximum(second, 1.0e-300)), 1.0)
    return X / scales, y, active


def forward_select(X: np.ndarray, y: np.ndarray, config: SelectionConfig) -> SelectionTrace:
    """Run the testing-based selection loop over the columns of ``X``.

    Columns are standardized internally, so the resulting path is invariant
    to positive column rescaling.  Candidates that are collinear with the
    current working set are skipped for the step but stay eligible later;
    identically-zero columns (e.g. constants after intercept demeaning) are
    never candidates.  Exact ties in the statistic break toward the lowest
    column index.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if n <= 2:
        raise ValueError(f"need more than 2 observations, got {n}")
    max_steps = default_max_steps(n, p)
    if config.max_steps is not None:
        max_steps = min(config.max_steps, max_steps)

    Xs, yw, active = _prepare(X, y, config)
    degenerate = tuple(int(j) for j in np.flatnonzero(~active))

    G = Xs.T @ Xs
    diag_g = np.diag(G).copy()
    gy = Xs.T @ yw
    yy = float(yw @ yw)
    need_breve = config.se_kind == WHITE
    need_tau = config.policy == FORWARD_I and need_breve
    X2 = Xs * Xs if need_tau else None

    S: list[int] = []
    chol = chol_empty()
    r = yw.copy()
    rss = yy
    steps: list[StepRecord] = []
    reason = None

    while True:
        if len(S) >= max_steps:
            reason = "max-steps"
            break
        candidate_ok = active.copy()
        candidate_ok[S] = False
        rest = np.flatnonzero(candidate_ok)
        if rest.size == 0:
            reason = "no-candidate"
            break

        # Residualize all candidates against the working set in one pass.
        if S:
            cross = G[np.ix_(S, rest)]
            B = solve_spd(chol, cross)
            q = diag_g[rest] - np.einsum("ij,ij->j", cross, B)
            h = gy[rest] - B.T @ gy[S]
        else:
            B = np.zeros((0, rest.size))
            q = diag_g[rest].copy()
            h = gy[rest].copy()

        skip = q <= PIVOT_FLOOR * diag_g[rest]
        q_safe = np.where(skip, 1.0, q)
        c = np.where(skip, 0.0, h / q_safe)
        df = n - len(S) - 1

        if need_breve:
            breve = Xs[:, rest] - Xs[:, S] @ B if S else Xs[:, rest].copy()
            b2 = breve * breve
            r2 = r * r
            # Sandwich middle term with candidate-specific residuals
            # resid = r - c * breve, expanded into column sums.
            t1 = r2 @ b2
            t2 = r @ (b2 * breve)
            t3 = np.einsum("ij,ij->j", b2, b2)
            mid = np.maximum(t1 - 2.0 * c * t2 + c * c * t3, 0.0)
            v = mid / (q_safe * q_safe)
        else:
            rss_j = np.maximum(rss - c * c * q_safe, 0.0)
            v = (rss_j / df) / q_safe

        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(v > 0.0, np.abs(c) / np.sqrt(v), np.where(c != 0.0, math.inf, 0.0))
        w[skip] = -math.inf

        base = threshold(config, p, len(S), 1.0)
        if need_tau:
            # Residual-weighted norms of the own column and of each working
            # column, again with candidate-specific residuals.
            cols2 = X2[:, rest]
            a0 = r2 @ cols2
            a1 = r @ (cols2 * breve)
            a2 = np.einsum("ij,ij->j", b2, cols2)
            d_own = np.maximum(a0 - 2.0 * c * a1 + c * c * a2, 0.0)
            if S:
                sel2 = X2[:, S]
                d0 = r2 @ sel2
                d1 = sel2.T @ (breve * r[:, None])
                d2 = sel2.T @ b2
                d_sel = np.maximum(d0[:, None] - 2.0 * c * d1 + (c * c) * d2, 0.0)
            else:
                d_sel = np.zeros((0, rest.size))
            abs_b = np.abs(B)
            if config.tau_form == TAU_SQRT:
                num = np.sqrt(d_own) + np.einsum("kj,kj->j", abs_b, np.sqrt(d_sel))
            else:
                num = d_own + np.einsum("kj,kj->j", abs_b, d_sel)
            tau = np.ones(rest.size)
            good = mid > 0.0
            tau[good] = num[good] / np.sqrt(mid[good])
            thr = base * tau
        else:
            thr = np.full(rest.size, base)

        passing = (~skip) & (w >= thr)
        n_passing = int(np.count_nonzero(passing))
        if n_passing == 0:
            reason = "no-candidate"
            break
        pass_pos = np.flatnonzero(passing)
        pick = int(pass_pos[np.argmax(w[pass_pos])])
        j_hat = int(rest[pick])

        steps.append(
            StepRecord(
                index=j_hat,
                w=float(w[pick]),
                threshold=float(thr[pick]),
                n_passing=n_passing,
                skipped=tuple(int(k) for k in rest[skip]),
            )
        )
        chol = chol_append(
            chol,
            G[S, j_hat] if S else np.zeros(0),
            float(diag_g[j_hat]),
            index=j_hat,
        )
        S.append(j_hat)
        # Refresh the working residual from scratch; O(n|S|) and immune to
        # drift along the path.
        coef_s = solve_spd(chol, gy[S])
        r = yw - Xs[:, S] @ coef_s
        rss = float(r @ r)
        if rss <= PERFECT_FIT_RTOL * yy:
            reason = "perfect-fit"
            break

    return SelectionTrace(
        steps=steps,
        support=tuple(S),
        reason=reason,
        n=n,
        p=p,
        config=config,
        degenerate_columns=degenerate,
    )


def refit(X: np.ndarray, y: np.ndarray, trace: SelectionTrace) -> SelectedModel:
    """OLS refit on the selected support, reported on original column scales.

    An empty support yields the zero fit, or the sample-mean fit when the
    trace was produced with an intercept.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    support = trace.support
    cols = list(support)
    if trace.config.include_intercept:
        x_mean = X.mean(axis=0)
        fit = ols_fit(X - x_mean, y - y.mean(), support)
        intercept = float(y.mean()) - (float(x_mean[cols] @ fit.coef) if support else 0.0)
    else:
        fit = ols_fit(X, y, support)
        intercept = 0.0
    fitted = np.full(len(y), intercept)
    if support:
        fitted = fitted + X[:, cols] @ fit.coef
    return SelectedModel(support, fit.coef, fitted, intercept)
