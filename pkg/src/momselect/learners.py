"""Learning algorithms that map a training subsample to a linear estimator.

Two learners are provided: an l1-penalized least-squares solver (cyclic
coordinate descent with soft-thresholding) and a least-squares fit
restricted to a fixed coordinate subspace.  Both are pure functions of
their inputs; the coordinate-descent inner loop is compiled with numba
and sweeps coordinates in a fixed order, so repeated fits are
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

DEFAULT_TOL = 1e-7
# blocks holding a huge constant-response outlier condition the problem
# badly; small corrupted instances genuinely need > 10^4 sweeps
DEFAULT_MAX_SWEEPS = 100_000


class LearnerError(ValueError):
    """Base class for learner failures."""


class NumericError(LearnerError):
    """Non-finite values in the training data."""


class InvalidSubspaceError(LearnerError):
    """Subspace indices empty, repeated, or out of range."""


class ConvergenceError(LearnerError):
    """Coordinate descent exhausted its sweep budget; carries the
    first-order optimality residual reached at that point."""

    def __init__(self, message: str, kkt_residual: float):
        super().__init__(message)
        self.kkt_residual = kkt_residual


@dataclass(frozen=True)
class Lasso:
    """l1-penalized squared-loss learner: minimizes
    mean squared residual over the subsample plus lam * ||beta||_1."""

    lam: float
    tol: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    standardize: bool = False

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise LearnerError(f"regularization weight must be >= 0, got {self.lam}")
        if self.tol <= 0 or self.max_sweeps < 1:
            raise LearnerError("tol must be > 0 and max_sweeps >= 1")


@dataclass(frozen=True)
class Erm:
    """Least-squares learner restricted to the given coordinate subspace."""

    subspace: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.subspace) == 0:
            raise InvalidSubspaceError("subspace must contain at least one coordinate")
        if len(set(self.subspace)) != len(self.subspace):
            raise InvalidSubspaceError(f"subspace indices repeat: {self.subspace}")
        if min(self.subspace) < 0:
            raise InvalidSubspaceError(f"subspace indices must be >= 0: {self.subspace}")


Learner = Lasso | Erm


@dataclass(frozen=True)
class Estimator:
    """A linear predictor x -> <beta, x>."""

    beta: np.ndarray

    def __post_init__(self) -> None:
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        if beta.ndim != 1:
            raise LearnerError(f"beta must be 1-d, got ndim={beta.ndim}")
        if not np.all(np.isfinite(beta)):
            raise NumericError("estimator has non-finite coefficients")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)


@njit(cache=True, nogil=True)
def _cd_sweeps(x, y, thr, tol, max_sweeps, beta, objective_out, record_objective):
    """Cyclic coordinate descent on 0.5-scaled thresholds.

    thr is the soft-threshold level on the correlation scale,
    lam * n / 2.  Returns the number of sweeps run, or -1 if the update
    criterion was never met.  beta is updated in place; objective_out
    (length max_sweeps + 1) is filled when record_objective is true.
    """
    n, d = x.shape
    col_sq = np.zeros(d)
    for j in range(d):
        s = 0.0
        for i in range(n):
            s += x[i, j] * x[i, j]
        col_sq[j] = s
    r = y.copy()
    for j in range(d):
        bj = beta[j]
        if bj != 0.0:
            for i in range(n):
                r[i] -= bj * x[i, j]
    lam = 2.0 * thr / n
    if record_objective:
        s = 0.0
        for i in range(n):
            s += r[i] * r[i]
        pen = 0.0
        for j in range(d):
            pen += abs(beta[j])
        objective_out[0] = s / n + lam * pen
    for sweep in range(max_sweeps):
        converged = True
        for j in range(d):
            if col_sq[j] == 0.0:
                # an all-zero column never affects the fit; the penalty
                # (or the minimum-norm convention at lam = 0) zeroes it
                beta[j] = 0.0
                continue
            bj = beta[j]
            rho = 0.0
            for i in range(n):
                rho += x[i, j] * r[i]
            rho += col_sq[j] * bj
            if rho > thr:
                new = (rho - thr) / col_sq[j]
            elif rho < -thr:
                new = (rho + thr) / col_sq[j]
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                for i in range(n):
                    r[i] -= delta * x[i, j]
                beta[j] = new
            if abs(delta) >= tol * (1.0 + abs(new)):
                converged = False
        if record_objective:
            s = 0.0
            for i in range(n):
                s += r[i] * r[i]
            pen = 0.0
            for j in range(d):
                pen += abs(beta[j])
            objective_out[sweep + 1] = s / n + lam * pen
        if converged:
            return sweep + 1
    return -1


def _check_training_arrays(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise LearnerError(f"incompatible shapes x{x.shape}, y{y.shape}")
    if x.shape[0] < 1:
        raise LearnerError("training subsample is empty")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NumericError("training data contains non-finite values")
    return x, y


def lasso_objective(x, y, beta, lam: float) -> float:
    """Mean squared residual plus lam * ||beta||_1."""
    r = y - x @ beta
    return float(r @ r) / x.shape[0] + lam * float(np.abs(beta).sum())


def kkt_residual(x, y, beta, lam: float) -> float:
    """Largest violation of the subgradient optimality conditions.

    With r = y - x beta and g = (2/n) x^T r, optimality requires
    g_j = lam * sign(beta_j) on active coordinates and |g_j| <= lam on
    inactive ones; returns the worst absolute slack over all j.
    """
    n = x.shape[0]
    r = y - x @ beta
    g = (2.0 / n) * (x.T @ r)
    active = beta != 0
    viol = 0.0
    if np.any(active):
        viol = float(np.max(np.abs(g[active] - lam * np.sign(beta[active]))))
    if np.any(~active):
        viol = max(viol, float(np.max(np.abs(g[~active]))) - lam)
    return max(viol, 0.0)


def lasso_fit(
    x,
    y,
    lam: float,
    *,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    beta0: np.ndarray | None = None,
    standardize: bool = False,
    objective_history: list | None = None,
) -> Estimator:
    """Solve the l1-penalized least-squares problem on one subsample.

    Cyclic coordinate descent with exact single-coordinate minimization;
    converges when every coordinate update falls below tol * (1 + |beta_j|).
    beta0 warm-starts the solve.  With standardize=True columns are
    scaled to unit standard deviation before fitting and the
    coefficients are mapped back, which reweights the penalty per
    column; the optimality conditions reported by kkt_residual apply to
    the unstandardized problem only.
    """
    if lam < 0:
        raise LearnerError(f"regularization weight must be >= 0, got {lam}")
    x, y = _check_training_arrays(x, y)
    n, d = x.shape

    scale = None
    if standardize:
        scale = x.std(axis=0)
        scale[scale == 0.0] = 1.0
        x = np.ascontiguousarray(x / scale)

    beta = np.zeros(d)
    if beta0 is not None:
        if beta0.shape != (d,):
            raise LearnerError(f"warm start has shape {beta0.shape}, expected ({d},)")
        beta[:] = beta0
        if scale is not None:
            beta *= scale

    record = objective_history is not None
    obj_buf = np.empty(max_sweeps + 1) if record else np.empty(0)
    sweeps = _cd_sweeps(x, y, 0.5 * lam * n, tol, max_sweeps, beta, obj_buf, record)
    if record:
        count = max_sweeps if sweeps < 0 else sweeps
        objective_history.extend(obj_buf[: count + 1].tolist())
    if sweeps < 0:
        raise ConvergenceError(
            f"no convergence after {max_sweeps} sweeps (lam={lam:g}, n={n}, d={d})",
            kkt_residual=kkt_residual(x, y, beta, lam),
        )
    if scale is not None:
        beta = beta / scale
    return Estimator(beta=beta)


def erm_fit(x, y, subspace) -> Estimator:
    """Least-squares solution restricted to the given coordinates.

    Coordinates outside the subspace are zero.  When the restricted
    design is rank-deficient the minimum-norm solution is returned.
    """
    x, y = _check_training_arrays(x, y)
    d = x.shape[1]
    idx = tuple(subspace)
    if len(idx) == 0:
        raise InvalidSubspaceError("subspace must contain at least one coordinate")
    if len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= d:
        raise InvalidSubspaceError(f"subspace {idx} invalid for d={d}")
    sub, *_ = np.linalg.lstsq(x[:, idx], y, rcond=None)
    beta = np.zeros(d)
    beta[list(idx)] = sub
    return Estimator(beta=beta)


def fit_learner(learner: Learner, x, y, beta0: np.ndarray | None = None) -> Estimator:
    """Train one learner on one subsample."""
    if isinstance(learner, Lasso):
        return lasso_fit(
            x,
            y,
            learner.lam,
            tol=learner.tol,
            max_sweeps=learner.max_sweeps,
            beta0=beta0,
            standardize=learner.standardize,
        )
    if isinstance(learner, Erm):
        return erm_fit(x, y, learner.subspace)
    raise LearnerError(f"unknown learner {learner!r}")


def predict(est: Estimator, x):
    """Predicted response(s) <beta, x> for a single row or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != est.beta.shape[0]:
        raise LearnerError(
            f"feature dimension {x.shape[-1]} does not match beta ({est.beta.shape[0]})"
        )
    out = x @ est.beta
    return float(out) if out.ndim == 0 else out
