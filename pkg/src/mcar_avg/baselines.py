"""Comparison estimators: complete-case, mean imputation, and all-subsets
model averaging after mean imputation.
"""

from dataclasses import dataclass

import numpy as np

from .averaging import DEFAULT_LAMBDA, AveragedEstimate, minimize_weights
from .data import ObservedDataset
from .errors import CandidateError, DataError
from .glm import FittedCandidate, GlmFamily, fit_design, fit_mle
from .patterns import SUBSET, CandidateModel, Projection, build_candidates

MAX_SUBSET_CANDIDATES = 2**20


@dataclass(frozen=True)
class ImputedDataset:
    """Covariates with each missing cell replaced by its column's observed mean."""

    x_imputed: np.ndarray
    provenance_mask: np.ndarray


def mean_impute(d: ObservedDataset) -> ImputedDataset:
    """Column-mean imputation; requires at least one observed entry per column."""
    counts = d.mask.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if len(empty):
        raise DataError(
            f"column {d.column_names[empty[0]]!r} has no observed entries to average"
        )
    sums = np.where(d.mask, d.x, 0.0).sum(axis=0)
    means = sums / counts
    x_imputed = np.where(d.mask, d.x, means[np.newaxis, :])
    return ImputedDataset(x_imputed=x_imputed, provenance_mask=d.mask)


def fit_cc(f: GlmFamily, d: ObservedDataset) -> FittedCandidate:
    """Fit the complete-case model (candidate 1)."""
    cc = build_candidates(d)[0]
    return fit_mle(f, cc, d)


def fit_mim(f: GlmFamily, d: ObservedDataset) -> np.ndarray:
    """Full-model MLE on the mean-imputed covariates over all rows."""
    imp = mean_impute(d)
    return fit_design(f, imp.x_imputed, d.y).beta


def fit_mima(
    f: GlmFamily, d: ObservedDataset, lambda_n: float = DEFAULT_LAMBDA
) -> AveragedEstimate:
    """Model averaging over every nonempty column subset after mean imputation.

    Subsets are enumerated by binary counting on column indices; each is fit
    by MLE on all rows of the imputed design, and weights are chosen by the
    same penalized criterion, with the imputed matrix as the design.
    """
    K = d.n_columns
    n_subsets = 2**K - 1
    if n_subsets > MAX_SUBSET_CANDIDATES:
        raise CandidateError(
            f"{n_subsets} column subsets exceed the cap of {MAX_SUBSET_CANDIDATES}; "
            "pass an explicit candidate list instead"
        )
    imp = mean_impute(d)
    all_rows = np.arange(d.n_rows, dtype=np.intp)
    fits = []
    for m in range(1, n_subsets + 1):
        cols = np.flatnonzero([(m >> j) & 1 for j in range(K)]).astype(np.intp)
        cand = CandidateModel(id=m, kind=SUBSET, rows=all_rows, columns=cols)
        res = fit_design(f, imp.x_imputed[:, cols], d.y)
        proj = Projection(zeta=cols, total_columns=K)
        fits.append(
            FittedCandidate(
                candidate=cand,
                beta_sub=res.beta,
                beta_full=proj.expand(res.beta),
                converged=res.converged,
                iterations=res.iterations,
                max_abs_score=res.max_abs_score,
            )
        )
    return minimize_weights(f, fits, imp.x_imputed, d.y, lambda_n)
