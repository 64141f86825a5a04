"""Hot numerical kernels: cumulant evaluation, Newton MLE, simplex-projected
weight optimization.

Every kernel is written against the numba-compatible subset of numpy and is
JIT-compiled at import time when numba is available.  Setting the environment
variable ``MCAR_AVG_NUMBA=0`` (or ``off``/``false``/``no``) forces the plain
interpreted numpy path; ``MCAR_AVG_NUMBA=1`` makes a missing numba an import
error.  ``benchmarks/bench_backends.py`` compares the two paths.

Families are dispatched on a small integer id so the kernels stay monomorphic:
0 = gaussian-identity, 1 = bernoulli-logit, 2 = poisson-log.
"""

import os

import numpy as np

GAUSSIAN = 0
BERNOULLI = 1
POISSON = 2


def _resolve_backend() -> bool:
    flag = os.environ.get("MCAR_AVG_NUMBA", "auto").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return False
    if flag in ("1", "on", "true", "yes"):
        import numba  # noqa: F401

        return True
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


USE_NUMBA = _resolve_backend()

if USE_NUMBA:
    from numba import njit

    def _kernel(fn):
        return njit(cache=True, nogil=True)(fn)

else:

    def _kernel(fn):
        return fn


def backend() -> str:
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


@_kernel
def b_vec(fam, theta):
    """Cumulant b(theta), elementwise.

    The bernoulli branch uses the overflow-stable form
    max(theta, 0) + log1p(exp(-|theta|)).
    """
    if fam == BERNOULLI:
        return np.maximum(theta, 0.0) + np.log1p(np.exp(-np.abs(theta)))
    if fam == POISSON:
        return np.exp(theta)
    return 0.5 * theta * theta


@_kernel
def b_prime_vec(fam, theta):
    """Mean function b'(theta), elementwise (stable logistic for bernoulli)."""
    if fam == BERNOULLI:
        t = np.exp(-np.abs(theta))
        return np.where(theta >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))
    if fam == POISSON:
        return np.exp(theta)
    return theta.copy()


@_kernel
def b_double_prime_vec(fam, theta):
    """Variance function b''(theta), elementwise."""
    if fam == BERNOULLI:
        t = np.exp(-np.abs(theta))
        return t / ((1.0 + t) * (1.0 + t))
    if fam == POISSON:
        return np.exp(theta)
    return np.ones_like(theta)


@_kernel
def loglik_kernel(y, theta, fam):
    """Sum of y*theta - b(theta); the beta-dependent log-likelihood part."""
    return y @ theta - np.sum(b_vec(fam, theta))


@_kernel
def chol_solve(H, g):
    """Solve H x = g for symmetric positive-definite H.

    Hand-rolled Cholesky so that failure is reported through a flag instead
    of an exception (exceptions are awkward under nopython compilation).
    Returns ``(x, ok)``; ``ok`` is False when H is not numerically PD.
    """
    k = H.shape[0]
    L = np.zeros((k, k))
    x = np.zeros(k)
    for j in range(k):
        s = H[j, j]
        for m in range(j):
            s -= L[j, m] * L[j, m]
        if not (s > 0.0 and np.isfinite(s)):
            return x, False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, k):
            t = H[i, j]
            for m in range(j):
                t -= L[i, m] * L[j, m]
            L[i, j] = t / L[j, j]
    z = np.zeros(k)
    for i in range(k):
        t = g[i]
        for m in range(i):
            t -= L[i, m] * z[m]
        z[i] = t / L[i, i]
    for i in range(k - 1, -1, -1):
        t = z[i]
        for m in range(i + 1, k):
            t -= L[m, i] * x[m]
        x[i] = t / L[i, i]
    for i in range(k):
        if not np.isfinite(x[i]):
            return x, False
    return x, True


@_kernel
def newton_fit(fam, X, y, max_iter, score_tol, rel_tol, beta_cap):
    """Maximize the likelihood kernel by Newton steps with step-halving.

    Starts at beta = 0.  A step is accepted only when it does not decrease
    the kernel.  A nearly singular Hessian gets one ridge bump of
    1e-10 * trace/k per step.  Iterates are clamped at +-beta_cap and the
    fit is flagged non-convergent when the clamp fires.

    Returns ``(beta, converged, iterations, max_abs_score)`` where
    ``converged`` requires the max absolute score component <= score_tol.
    """
    n, k = X.shape
    beta = np.zeros(k)
    theta = np.zeros(n)
    kern = loglik_kernel(y, theta, fam)
    it = 0
    diverged = False
    for _ in range(max_iter):
        mu = b_prime_vec(fam, theta)
        score = X.T @ (y - mu)
        if np.max(np.abs(score)) <= score_tol:
            break
        wv = b_double_prime_vec(fam, theta)
        H = X.T @ (X * wv.reshape(n, 1))
        d, ok = chol_solve(H, score)
        if not ok:
            tr = 0.0
            for j in range(k):
                tr += H[j, j]
            Hr = H.copy()
            for j in range(k):
                Hr[j, j] += 1e-10 * tr / k
            d, ok = chol_solve(Hr, score)
            if not ok:
                break
        it += 1
        t = 1.0
        accepted = False
        cand = beta
        theta_c = theta
        kern_c = kern
        for _h in range(60):
            cand = beta + t * d
            theta_c = X @ cand
            kern_c = loglik_kernel(y, theta_c, fam)
            if np.isfinite(kern_c) and kern_c >= kern:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        beta = cand
        theta = theta_c
        clamped = False
        for j in range(k):
            if beta[j] > beta_cap:
                beta[j] = beta_cap
                clamped = True
            elif beta[j] < -beta_cap:
                beta[j] = -beta_cap
                clamped = True
        if clamped:
            diverged = True
            theta = X @ beta
            break
        rel = np.abs(kern_c - kern) / max(1.0, np.abs(kern))
        kern = kern_c
        if rel <= rel_tol:
            break
    mu = b_prime_vec(fam, theta)
    score = X.T @ (y - mu)
    mas = np.max(np.abs(score))
    converged = bool(mas <= score_tol) and not diverged
    return beta, converged, it, mas


@_kernel
def project_simplex(v):
    """Euclidean projection onto the probability simplex (sorting algorithm)."""
    S = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = 0
    for j in range(S):
        if u[j] + (1.0 - css[j]) / (j + 1.0) > 0.0:
            rho = j
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


@_kernel
def weight_criterion(fam, Theta, y, kvec, phi, lam, w):
    """Penalized weight-choice criterion at w.

    Theta holds one column per candidate: the zero-filled design times the
    candidate's padded coefficients, so Theta @ w is the averaged predictor.
    """
    theta = Theta @ w
    return 2.0 / phi * (np.sum(b_vec(fam, theta)) - y @ theta) + lam * (kvec @ w)


@_kernel
def weight_gradient(fam, Theta, y, kvec, phi, lam, w):
    """Gradient of the weight-choice criterion at w."""
    theta = Theta @ w
    r = b_prime_vec(fam, theta) - y
    return 2.0 / phi * (Theta.T @ r) + lam * kvec


@_kernel
def optimize_weights(fam, Theta, y, kvec, phi, lam, pg_tol, max_iter):
    """Minimize the weight criterion over the simplex by projected gradient.

    Spectral (Barzilai-Borwein) step with monotone Armijo backtracking along
    the projection arc, started from uniform weights.  Terminates when the
    unit-step projected-gradient norm ||w - P(w - g)|| drops to pg_tol, when
    the line search stalls at float precision, or at max_iter.

    Returns ``(w, iterations, pg_norm)``.
    """
    S = Theta.shape[1]
    w = np.full(S, 1.0 / S)
    f = weight_criterion(fam, Theta, y, kvec, phi, lam, w)
    g = weight_gradient(fam, Theta, y, kvec, phi, lam, w)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        return w, 0, np.inf
    pg_vec = w - project_simplex(w - g)
    pg = np.sqrt(pg_vec @ pg_vec)
    t = 1.0 / max(1.0, np.sqrt(g @ g))
    it = 0
    while pg > pg_tol and it < max_iter:
        it += 1
        tt = t
        accepted = False
        w_new = w
        f_new = f
        for _h in range(80):
            w_new = project_simplex(w - tt * g)
            d = w_new - w
            f_new = weight_criterion(fam, Theta, y, kvec, phi, lam, w_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * (g @ d):
                accepted = True
                break
            tt *= 0.5
        if not accepted:
            break
        s = w_new - w
        step2 = s @ s
        g_new = weight_gradient(fam, Theta, y, kvec, phi, lam, w_new)
        yv = g_new - g
        sy = s @ yv
        if sy > 1e-300:
            t = min(max(step2 / sy, 1e-12), 1e12)
        else:
            t = min(max(tt * 2.0, 1e-12), 1e12)
        w = w_new
        f = f_new
        g = g_new
        pg_vec = w - project_simplex(w - g)
        pg = np.sqrt(pg_vec @ pg_vec)
        if step2 <= 1e-30:
            break

    # The Armijo test stalls once criterion differences fall to float
    # precision, typically near pg ~ 1e-7.  Newton steps restricted to the
    # active face (solved with the sum-to-one constraint) do not rely on
    # criterion differences and polish the projected gradient much further;
    # steps are accepted only when they keep f from rising and shrink pg.
    n = Theta.shape[0]
    for _round in range(40):
        if pg <= pg_tol:
            break
        idx = np.flatnonzero(w > 0.0)
        a = idx.shape[0]
        if a < 2:
            break
        theta = Theta @ w
        wv = b_double_prime_vec(fam, theta)
        Ta = np.empty((n, a))
        for jj in range(a):
            Ta[:, jj] = Theta[:, idx[jj]]
        Ha = (2.0 / phi) * (Ta.T @ (Ta * wv.reshape(n, 1)))
        ga = g[idx]
        ones = np.ones(a)
        z1, ok1 = chol_solve(Ha, ga)
        z2, ok2 = chol_solve(Ha, ones)
        if not (ok1 and ok2):
            break
        denom = ones @ z2
        if denom <= 0.0:
            break
        nu = -(ones @ z1) / denom
        da = -(z1 + nu * z2)
        tmax = 1.0
        for jj in range(a):
            if da[jj] < 0.0 and w[idx[jj]] + tmax * da[jj] < 0.0:
                tmax = -w[idx[jj]] / da[jj]
        if not tmax > 0.0:
            break
        t_ls = tmax
        improved = False
        for _h in range(30):
            w_try = w.copy()
            for jj in range(a):
                v = w[idx[jj]] + t_ls * da[jj]
                w_try[idx[jj]] = v if v > 0.0 else 0.0
            w_try /= np.sum(w_try)
            f_try = weight_criterion(fam, Theta, y, kvec, phi, lam, w_try)
            if np.isfinite(f_try) and f_try <= f + 1e-10 * (1.0 + np.abs(f)):
                g_try = weight_gradient(fam, Theta, y, kvec, phi, lam, w_try)
                pg_vec = w_try - project_simplex(w_try - g_try)
                pg_try = np.sqrt(pg_vec @ pg_vec)
                if pg_try < pg:
                    w = w_try
                    f = min(f_try, f)
                    g = g_try
                    pg = pg_try
                    improved = True
                    break
            t_ls *= 0.5
        if not improved:
            break
    return w, it, pg
