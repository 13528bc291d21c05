"""Compiled EM iterations for small full-covariance mixtures."""
import math

import numpy as np
from numba import njit

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_TINY = -600.0


@njit(cache=True)
def _cholesky(a, out):
    d = a.shape[0]
    for i in range(d):
        for j in range(i + 1):
            s = a[i, j]
            for m in range(j):
                s -= out[i, m] * out[j, m]
            if i == j:
                if s <= 0.0:
                    return False
                out[i, i] = math.sqrt(s)
            else:
                out[i, j] = s / out[j, j]
        for j in range(i + 1, d):
            out[i, j] = 0.0
    return True


@njit(cache=True)
def component_log_pdf(xt, means, covs, out):
    """Fill ``out[k, b]`` with log N(x_b; means[k], covs[k]); ``xt`` is (d, B)."""
    n_comp, d = means.shape
    b = xt.shape[1]
    chol = np.empty((d, d))
    y = np.empty((d, b))
    for k in range(n_comp):
        if not _cholesky(covs[k], chol):
            raise ValueError("covariance is not positive definite")
        log_det = 0.0
        for i in range(d):
            log_det += 2.0 * math.log(chol[i, i])
        const = -0.5 * (d * _LOG_2PI + log_det)
        row = out[k]
        for p in range(b):
            row[p] = 0.0
        # forward substitution, vectorized over points
        for i in range(d):
            yi = y[i]
            xi = xt[i]
            mu = means[k, i]
            inv = 1.0 / chol[i, i]
            for p in range(b):
                yi[p] = xi[p] - mu
            for m in range(i):
                c = chol[i, m]
                ym = y[m]
                for p in range(b):
                    yi[p] -= c * ym[p]
            for p in range(b):
                yi[p] *= inv
                row[p] += yi[p] * yi[p]
        for p in range(b):
            row[p] = const - 0.5 * row[p]


@njit(cache=True)
def _weighted_log_pdf(xt, priors, means, covs, lp, norm, resp):
    """Fill weighted log-densities, per-point log-normalizers and responsibilities."""
    component_log_pdf(xt, means, covs, lp)
    n_comp, b = lp.shape
    for k in range(n_comp):
        lw = math.log(priors[k]) if priors[k] > 0.0 else -np.inf
        for p in range(b):
            lp[k, p] += lw
    top = np.full(b, -np.inf)
    for k in range(n_comp):
        for p in range(b):
            if lp[k, p] > top[p]:
                top[p] = lp[k, p]
    s = np.zeros(b)
    for k in range(n_comp):
        for p in range(b):
            # below exp(-600) the term cannot change s (which is >= 1); zeroing it
            # keeps subnormals out of the M-step sums
            r = lp[k, p] - top[p]
            e = math.exp(r) if r > _LOG_TINY else 0.0
            resp[k, p] = e
            s[p] += e
    for k in range(n_comp):
        for p in range(b):
            resp[k, p] /= s[p]
    total = 0.0
    for p in range(b):
        norm[p] = top[p] + math.log(s[p])
        total += norm[p]
    return total


# reassociation lets the weighted sums vectorize; NaN/inf semantics are kept
@njit(cache=True, fastmath={"reassoc"})
def _m_step(xt, resp_all, priors, means, covs, reg):
    n_comp, b = resp_all.shape
    d = xt.shape[0]
    diff = np.empty((d, b))
    for k in range(n_comp):
        resp = resp_all[k]
        nk = 0.0
        for p in range(b):
            nk += resp[p]
        priors[k] = nk / b
        safe = nk if nk > 1e-300 else 1e-300
        for i in range(d):
            xi = xt[i]
            s = 0.0
            for p in range(b):
                s += resp[p] * xi[p]
            means[k, i] = s / safe
            mu = means[k, i]
            di = diff[i]
            for p in range(b):
                di[p] = xi[p] - mu
        for i in range(d):
            di = diff[i]
            for j in range(i + 1):
                dj = diff[j]
                s = 0.0
                for p in range(b):
                    s += resp[p] * di[p] * dj[p]
                s /= safe
                if i == j:
                    s += reg
                covs[k, i, j] = s
                covs[k, j, i] = s


@njit(cache=True)
def em_loop(x, priors, means, covs, reg, base_cov, tol, max_iter, collapse):
    """Run EM in place from the given parameters.

    Returns the log-likelihood history; NaN entries mark an empty-component
    rescue (monotonicity is only expected between markers).
    """
    n_comp = priors.shape[0]
    b = x.shape[0]
    xt = np.ascontiguousarray(x.T)
    lp = np.empty((n_comp, b))
    norm = np.empty(b)
    resp = np.empty((n_comp, b))
    hist = np.full(2 * max_iter + 2, np.nan)
    h = 0
    prev = -np.inf
    converged = False
    for _ in range(max_iter):
        rescued = False
        for k in range(n_comp):
            if priors[k] < collapse:
                rescued = True
        if rescued:
            _weighted_log_pdf(xt, priors, means, covs, lp, norm, resp)
            order = np.argsort(norm)
            j = 0
            for k in range(n_comp):
                if priors[k] < collapse:
                    means[k, :] = x[order[j]]
                    covs[k, :, :] = base_cov
                    priors[k] = 1.0 / b
                    j += 1
            priors /= priors.sum()
            hist[h] = np.nan
            h += 1
        ll = _weighted_log_pdf(xt, priors, means, covs, lp, norm, resp)
        hist[h] = ll
        h += 1
        if not rescued and prev > -np.inf and abs(ll - prev) <= tol * abs(prev):
            converged = True
            break
        prev = ll
        _m_step(xt, resp, priors, means, covs, reg)
    if not converged:
        hist[h] = _weighted_log_pdf(xt, priors, means, covs, lp, norm, resp)
        h += 1
    return hist[:h]


@njit(cache=True)
def mixture_log_density(x, priors, means, covs):
    n_comp = priors.shape[0]
    b = x.shape[0]
    xt = np.ascontiguousarray(x.T)
    lp = np.empty((n_comp, b))
    norm = np.empty(b)
    resp = np.empty((n_comp, b))
    _weighted_log_pdf(xt, priors, means, covs, lp, norm, resp)
    return norm
