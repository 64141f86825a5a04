"""Shared builders and independent oracles for the test suite.

The oracles deliberately avoid the package's kernel code paths: they use
scalar ``math`` functions accumulated with ``math.fsum`` (exact summation),
or brute-force enumeration, so agreement with the library is meaningful.
"""

import math
from collections import defaultdict

import numpy as np

from mcar_avg import ObservedDataset
from mcar_avg.glm import FittedCandidate
from mcar_avg.patterns import CandidateModel, Projection

# ---------------------------------------------------------------------------
# scalar family formulas, independent of mcar_avg._kernels
# ---------------------------------------------------------------------------


def oracle_b(name: str, t: float) -> float:
    if name == "bernoulli-logit":
        return max(t, 0.0) + math.log1p(math.exp(-abs(t)))
    if name == "poisson-log":
        return math.exp(t)
    if name == "gaussian-identity":
        return 0.5 * t * t
    raise ValueError(name)


def oracle_b_prime(name: str, t: float) -> float:
    if name == "bernoulli-logit":
        return 0.5 * (1.0 + math.tanh(t / 2.0))
    if name == "poisson-log":
        return math.exp(t)
    if name == "gaussian-identity":
        return t
    raise ValueError(name)


def oracle_loglik_kernel(name: str, y, theta, phi: float = 1.0) -> float:
    terms = [y[i] * theta[i] - oracle_b(name, theta[i]) for i in range(len(y))]
    return math.fsum(terms) / phi


def oracle_criterion(fam, betas, kvec, X, y, w, lam: float, phi: float = 1.0) -> float:
    """Term-by-term re-summation of the weight-choice criterion."""
    n, K = X.shape
    S = len(w)
    bw = [math.fsum(w[s] * betas[s][j] for s in range(S)) for j in range(K)]
    b_terms, y_terms = [], []
    for i in range(n):
        th = math.fsum(X[i, j] * bw[j] for j in range(K))
        b_terms.append(oracle_b(fam.name, th))
        y_terms.append(y[i] * th)
    penalty = math.fsum(w[s] * kvec[s] for s in range(S))
    return 2.0 / phi * (math.fsum(b_terms) - math.fsum(y_terms)) + lam * penalty


def oracle_kl(name: str, theta_hat, theta0, mu, phi: float = 1.0) -> float:
    terms = [
        oracle_b(name, theta_hat[i])
        - oracle_b(name, theta0[i])
        - mu[i] * (theta_hat[i] - theta0[i])
        for i in range(len(mu))
    ]
    return 2.0 / phi * math.fsum(terms)


# ---------------------------------------------------------------------------
# brute-force pattern grouping and candidate construction
# ---------------------------------------------------------------------------


def brute_groups(mask: np.ndarray) -> list[tuple[list[int], list[int]]]:
    """Group columns by sorting (missing-row-set, column) pairs."""
    K = mask.shape[1]
    by_key = defaultdict(list)
    for j in range(K):
        by_key[tuple(np.flatnonzero(~mask[:, j]).tolist())].append(j)
    ordered = sorted(by_key.items(), key=lambda kv: min(kv[1]))
    return [(sorted(cols), list(key)) for key, cols in ordered]


def brute_candidates(mask: np.ndarray) -> list[tuple[str, list[int], list[int]]]:
    """(kind, rows, columns) triples built from per-column observed sets."""
    n, K = mask.shape
    observed = [set(np.flatnonzero(mask[:, j]).tolist()) for j in range(K)]
    cc_rows = set(range(n))
    for j in range(K):
        cc_rows &= observed[j]
    out = [("cc", sorted(cc_rows), list(range(K)))]
    for cols, missing in brute_groups(mask):
        rows = sorted(set(range(n)) - set(missing))
        out.append(("ssi", rows, cols))
    return out


# ---------------------------------------------------------------------------
# the worked block-pattern example: 4 row blocks x 5 columns, n=12
# ---------------------------------------------------------------------------

BLOCK_ROWS = {
    "rb1": list(range(0, 6)),
    "rb2": [6, 7],
    "rb3": [8, 9],
    "rb4": [10, 11],
}

# column -> rows where it is unobserved
BLOCK_MISSING = {
    0: [],
    1: BLOCK_ROWS["rb2"],
    2: BLOCK_ROWS["rb2"] + BLOCK_ROWS["rb4"],
    3: BLOCK_ROWS["rb3"] + BLOCK_ROWS["rb4"],
    4: BLOCK_ROWS["rb4"],
}

BLOCK_EXPECTED_GROUPS = [
    ([0], []),
    ([1], [6, 7]),
    ([2], [6, 7, 10, 11]),
    ([3], [8, 9, 10, 11]),
    ([4], [10, 11]),
]

BLOCK_EXPECTED_CANDIDATES = [
    ("cc", list(range(0, 6)), [0, 1, 2, 3, 4]),
    ("ssi", list(range(0, 12)), [0]),
    ("ssi", list(range(0, 6)) + [8, 9, 10, 11], [1]),
    ("ssi", list(range(0, 6)) + [8, 9], [2]),
    ("ssi", list(range(0, 8)), [3]),
    ("ssi", list(range(0, 10)), [4]),
]


def block_dataset() -> ObservedDataset:
    rng = np.random.default_rng(2024)
    x = rng.normal(size=(12, 5))
    mask = np.ones((12, 5), dtype=bool)
    for col, rows in BLOCK_MISSING.items():
        mask[rows, col] = False
    y = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1], dtype=float)
    return ObservedDataset(
        y=y, x=x, mask=mask, column_names=tuple(f"x{j+1}" for j in range(5))
    )


# ---------------------------------------------------------------------------
# synthetic candidate sets for criterion/optimizer tests
# ---------------------------------------------------------------------------


def make_fit(columns, beta_sub, total_columns: int, cand_id: int = 1) -> FittedCandidate:
    cols = np.asarray(columns, dtype=np.intp)
    cand = CandidateModel(
        id=cand_id, kind="subset", rows=np.arange(total_columns), columns=cols
    )
    proj = Projection(zeta=cols, total_columns=total_columns)
    b = np.asarray(beta_sub, dtype=float)
    return FittedCandidate(
        candidate=cand,
        beta_sub=b,
        beta_full=proj.expand(b),
        converged=True,
        iterations=1,
        max_abs_score=0.0,
    )


def random_weight_instance(rng, fam, S=3, n=40, K=3):
    """Random design, response, and S random padded candidates."""
    X = rng.normal(size=(n, K))
    if fam.name == "bernoulli-logit":
        y = (rng.random(n) < 0.5).astype(float)
    elif fam.name == "poisson-log":
        y = rng.poisson(2.0, n).astype(float)
    else:
        y = rng.normal(size=n)
    fits = []
    for s in range(S):
        k = int(rng.integers(1, K + 1))
        cols = np.sort(rng.choice(K, size=k, replace=False))
        fits.append(make_fit(cols, rng.normal(scale=0.8, size=k), K, cand_id=s + 1))
    return fits, X, y


def random_masked_dataset(rng, n=10, K=4, miss_prob=0.3):
    """Random dataset where each covariate cell is independently masked."""
    x = rng.normal(size=(n, K))
    mask = rng.random((n, K)) >= miss_prob
    y = (rng.random(n) < 0.5).astype(float)
    return ObservedDataset(
        y=y, x=x, mask=mask, column_names=tuple(f"x{j+1}" for j in range(K))
    )
