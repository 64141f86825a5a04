"""Canonical-link exponential-family machinery and per-candidate ML fitting.

The density is parametrized as exp{(y*theta - b(theta))/phi + const(y, phi)}
with theta = x'beta.  The additive constant never depends on beta, so all
likelihood computations here work with the kernel sum(y*theta - b(theta))/phi.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CandidateError, McarAvgError
from .patterns import CandidateModel, Projection

SCORE_TOL = 1e-8
REL_KERNEL_TOL = 1e-12
MAX_NEWTON_ITER = 100
BETA_CAP = 1e4

_FAMILY_IDS = {
    "gaussian-identity": _kernels.GAUSSIAN,
    "bernoulli-logit": _kernels.BERNOULLI,
    "poisson-log": _kernels.POISSON,
}

_ALIASES = {
    "gaussian": "gaussian-identity",
    "normal": "gaussian-identity",
    "bernoulli": "bernoulli-logit",
    "binomial": "bernoulli-logit",
    "logistic": "bernoulli-logit",
    "poisson": "poisson-log",
}


@dataclass(frozen=True)
class GlmFamily:
    """A canonical exponential family: cumulant b, its derivatives, dispersion.

    b' is the mean function and b'' the variance function.  Dispersion phi
    is treated as known (1 for bernoulli and poisson).
    """

    name: str
    phi: float = 1.0
    fam_id: int = field(default=-1, repr=False)

    def __post_init__(self):
        if self.name not in _FAMILY_IDS:
            raise McarAvgError(f"unknown family {self.name!r}")
        if not (np.isfinite(self.phi) and self.phi > 0):
            raise McarAvgError(f"dispersion must be a positive real, got {self.phi}")
        object.__setattr__(self, "fam_id", _FAMILY_IDS[self.name])

    def _eval(self, kernel_fn, theta):
        arr = np.asarray(theta, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise McarAvgError("non-finite canonical parameter")
        out = kernel_fn(self.fam_id, np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    def b(self, theta):
        """Cumulant b(theta); scalar in, scalar out."""
        return self._eval(_kernels.b_vec, theta)

    def b_prime(self, theta):
        """Mean function b'(theta)."""
        return self._eval(_kernels.b_prime_vec, theta)

    def b_double_prime(self, theta):
        """Variance function b''(theta)."""
        return self._eval(_kernels.b_double_prime_vec, theta)


def family(name: str, phi: float | None = None) -> GlmFamily:
    """Look up a family by canonical name or common alias."""
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in _FAMILY_IDS:
        known = ", ".join(sorted(_FAMILY_IDS))
        raise McarAvgError(f"unknown family {name!r}; expected one of {known}")
    return GlmFamily(key) if phi is None else GlmFamily(key, phi)


def log_likelihood_kernel(f: GlmFamily, y, theta) -> float:
    """phi^{-1} * sum(y_i theta_i - b(theta_i)), the beta-dependent part."""
    y = np.asarray(y, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if y.shape != theta.shape:
        raise McarAvgError(
            f"length mismatch: y has {y.shape[0]}, theta has {theta.shape[0]}"
        )
    return float(_kernels.loglik_kernel(y, theta, f.fam_id)) / f.phi


@dataclass(frozen=True)
class GlmFit:
    """Raw design-matrix fit: coefficients plus Newton diagnostics."""

    beta: np.ndarray
    converged: bool
    iterations: int
    max_abs_score: float


@dataclass(frozen=True)
class FittedCandidate:
    """ML fit of one candidate: compressed and zero-padded coefficients."""

    candidate: CandidateModel
    beta_sub: np.ndarray
    beta_full: np.ndarray
    converged: bool
    iterations: int
    max_abs_score: float


def fit_design(f: GlmFamily, X, y) -> GlmFit:
    """Newton MLE on an explicit design matrix.

    Non-convergence (separation, clamped divergence, irrecoverably singular
    Hessian) is flagged on the result, never raised.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    beta, converged, iters, mas = _kernels.newton_fit(
        f.fam_id, X, y, MAX_NEWTON_ITER, SCORE_TOL, REL_KERNEL_TOL, BETA_CAP
    )
    return GlmFit(beta, bool(converged), int(iters), float(mas))


def fit_mle(f: GlmFamily, c: CandidateModel, d) -> FittedCandidate:
    """Fit one candidate model by maximum likelihood on its own rows/columns."""
    sub_mask = d.mask[np.ix_(c.rows, c.columns)]
    if not sub_mask.all():
        raise CandidateError(
            f"candidate {c.id} selects unobserved entries; its row/column sets are invalid"
        )
    X = d.x[np.ix_(c.rows, c.columns)]
    y = d.y[c.rows]
    res = fit_design(f, X, y)
    proj = Projection(zeta=c.columns, total_columns=d.n_columns)
    return FittedCandidate(
        candidate=c,
        beta_sub=res.beta,
        beta_full=proj.expand(res.beta),
        converged=res.converged,
        iterations=res.iterations,
        max_abs_score=res.max_abs_score,
    )
