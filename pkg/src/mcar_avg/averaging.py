"""Weight choice for model averaging: penalized criterion, gradient, and
simplex-constrained minimization.

The criterion at weights w is

    2/phi * sum_i b(theta_i(w)) - 2/phi * y' theta(w) + lambda_n * w' k,

with theta(w) the zero-filled design times the averaged coefficients and k
the per-candidate column counts.  The first two terms estimate the
goodness-of-fit part of the KL loss; plugging y in for its mean alone would
overfit, which is what the penalty corrects (lambda_n = 2 by default, the
AIC scaling).  b is convex and theta(w) is affine in w, so the criterion is
convex on the simplex and the projected-gradient minimizer is global.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import McarAvgError
from .glm import FittedCandidate, GlmFamily

DEFAULT_LAMBDA = 2.0
PG_TOL = 1e-8
PG_WARN_TOL = 1e-6
MAX_WEIGHT_ITER = 10_000


@dataclass(frozen=True)
class AveragedEstimate:
    """Weights on the simplex plus the combined coefficients and predictor."""

    weights: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    criterion_value: float
    penalty_vector: np.ndarray
    lambda_n: float
    pg_norm: float
    iterations: int
    converged: bool

    @property
    def warning(self) -> bool:
        """True when the optimizer stopped with a projected gradient above
        the acceptable band."""
        return not self.pg_norm <= PG_WARN_TOL


def _design(xt) -> np.ndarray:
    return np.ascontiguousarray(getattr(xt, "xt", xt), dtype=np.float64)


def _stack(fits: Sequence[FittedCandidate]):
    if len(fits) == 0:
        raise McarAvgError("need at least one fitted candidate")
    B = np.column_stack([f.beta_full for f in fits])
    kvec = np.array([float(f.candidate.k_s) for f in fits])
    return B, kvec


def check_weights(w, size: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """Validate a weight vector: entries in [0, 1], summing to 1 within tol."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or (size is not None and len(w) != size):
        raise McarAvgError(f"weight vector has shape {w.shape}, expected ({size},)")
    if np.any(w < -tol) or np.any(w > 1 + tol) or abs(w.sum() - 1.0) > tol:
        raise McarAvgError("weights must lie in [0,1] and sum to one")
    return w


def _linear_predictor(X, B, w) -> np.ndarray:
    theta = X @ (B @ w)
    bad = np.flatnonzero(~np.isfinite(theta))
    if len(bad):
        raise McarAvgError(f"non-finite linear predictor at row {int(bad[0]) + 1}")
    return theta


def criterion(
    f: GlmFamily,
    fits: Sequence[FittedCandidate],
    xt,
    y,
    w,
    lambda_n: float = DEFAULT_LAMBDA,
) -> float:
    """Evaluate the penalized weight-choice criterion at w."""
    X = _design(xt)
    B, kvec = _stack(fits)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    theta = _linear_predictor(X, B, w)
    bsum = float(np.sum(_kernels.b_vec(f.fam_id, theta)))
    return 2.0 / f.phi * (bsum - float(y @ theta)) + lambda_n * float(kvec @ w)


def criterion_gradient(
    f: GlmFamily,
    fits: Sequence[FittedCandidate],
    xt,
    y,
    w,
    lambda_n: float = DEFAULT_LAMBDA,
) -> np.ndarray:
    """Gradient of the criterion in w: 2/phi * Theta'(b'(theta) - y) + lambda_n k."""
    X = _design(xt)
    B, kvec = _stack(fits)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    theta = _linear_predictor(X, B, w)
    Theta = X @ B
    resid = _kernels.b_prime_vec(f.fam_id, theta) - y
    return 2.0 / f.phi * (Theta.T @ resid) + lambda_n * kvec


def kkt_certificate(
    f: GlmFamily,
    fits: Sequence[FittedCandidate],
    xt,
    y,
    w,
    lambda_n: float = DEFAULT_LAMBDA,
) -> float:
    """Smallest directional derivative over simplex directions at w.

    Nonnegative (up to tolerance) exactly when w satisfies the first-order
    optimality conditions; the minimizing direction always points at a
    vertex, so this is min_j g_j - g'w.
    """
    g = criterion_gradient(f, fits, xt, y, w, lambda_n)
    return float(np.min(g) - g @ np.asarray(w, dtype=np.float64))


def minimize_weights(
    f: GlmFamily,
    fits: Sequence[FittedCandidate],
    xt,
    y,
    lambda_n: float = DEFAULT_LAMBDA,
    *,
    pg_tol: float = PG_TOL,
    max_iter: int = MAX_WEIGHT_ITER,
) -> AveragedEstimate:
    """Minimize the criterion over the probability simplex.

    Projected-gradient descent (sorting-based Euclidean projection) with
    backtracking line search from the uniform start.  Convexity makes the
    limit a global minimizer; an iteration-cap stop with a projected
    gradient above 1e-6 is reported through the ``warning`` property, and
    the estimate is still returned.
    """
    X = _design(xt)
    B, kvec = _stack(fits)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise McarAvgError(f"design has {X.shape[0]} rows but y has {len(y)}")
    Theta = np.ascontiguousarray(X @ B)
    w, iters, pg = _kernels.optimize_weights(
        f.fam_id, Theta, y, kvec, f.phi, float(lambda_n), pg_tol, max_iter
    )
    beta = B @ w
    theta = _linear_predictor(X, B, w)
    value = criterion(f, fits, xt, y, w, lambda_n)
    return AveragedEstimate(
        weights=w,
        beta=beta,
        theta=theta,
        criterion_value=value,
        penalty_vector=kvec.astype(np.intp),
        lambda_n=float(lambda_n),
        pg_norm=float(pg),
        iterations=int(iters),
        converged=bool(pg <= pg_tol),
    )


def predict(est: AveragedEstimate, f: GlmFamily) -> np.ndarray:
    """Fitted mean vector: b' applied elementwise to the averaged predictor."""
    return _kernels.b_prime_vec(f.fam_id, est.theta)
