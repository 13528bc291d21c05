"""Gaussian mixture models fitted by Expectation-Maximization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._em_kernel import em_loop, mixture_log_density

REG_SCALE = 1e-6
TOL = 1e-6
MAX_ITER = 300
COLLAPSE_PRIOR = 1e-8


class DegenerateDataError(ValueError):
    """Raised when the data cannot support the requested mixture."""


@dataclass(frozen=True)
class GaussianComponent:
    prior: float
    mean: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True, eq=False)
class Gmm:
    """Mixture stored as stacked arrays.

    priors: (K,), means: (K, d), covariances: (K, d, d)
    """

    priors: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihoods: tuple = field(default=(), repr=False)

    def __post_init__(self):
        priors = np.array(self.priors, dtype=float).reshape(-1)
        means = np.array(self.means, dtype=float)
        covs = np.array(self.covariances, dtype=float)
        k = len(priors)
        if means.ndim == 1:
            means = means.reshape(k, -1)
        d = means.shape[1]
        covs = covs.reshape(k, d, d)
        if k < 1:
            raise ValueError("a mixture needs at least one component")
        if abs(priors.sum() - 1.0) > 1e-9 or np.any(priors < 0):
            raise ValueError("priors must be non-negative and sum to 1")
        if not np.allclose(covs, covs.transpose(0, 2, 1), rtol=0, atol=1e-12 * max(1.0, np.abs(covs).max())):
            raise ValueError("covariances must be symmetric")
        for arr in (priors, means, covs):
            arr.flags.writeable = False
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def n_components(self) -> int:
        return len(self.priors)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def components(self) -> list[GaussianComponent]:
        return [GaussianComponent(float(p), m, c)
                for p, m, c in zip(self.priors, self.means, self.covariances)]

    def marginal(self, dims) -> "Gmm":
        dims = np.asarray(dims)
        return Gmm(self.priors, self.means[:, dims],
                   self.covariances[:, dims[:, None], dims[None, :]])


def log_density(gmm: Gmm, x) -> np.ndarray | float:
    """log sum_k prior_k N(x; mean_k, cov_k) for a d-vector or a (B, d) matrix."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.ascontiguousarray(x.reshape(1, -1) if single else x)
    if pts.shape[1] != gmm.dim:
        raise ValueError(f"points have {pts.shape[1]} columns, mixture has dim {gmm.dim}")
    out = mixture_log_density(pts, gmm.priors, gmm.means, gmm.covariances)
    return float(out[0]) if single else out


def sample(gmm: Gmm, count: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    z = rng.standard_normal((count, gmm.dim))
    return sample_from_draws(gmm, u, z)


def sample_from_draws(gmm: Gmm, u, z) -> np.ndarray:
    """Map uniform ``u`` (count,) and standard normal ``z`` (count, d) to mixture draws.

    Exposed so two mixtures can be sampled with common random numbers.
    """
    cdf = np.cumsum(gmm.priors)
    comp = np.minimum(np.searchsorted(cdf / cdf[-1], u, side="right"), gmm.n_components - 1)
    chol = np.linalg.cholesky(gmm.covariances)
    return gmm.means[comp] + np.einsum("bij,bj->bi", chol[comp], z)


def _kmeanspp(x, k, rng):
    b = len(x)
    centers = [int(rng.integers(b))]
    d2 = ((x - x[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(b))
        else:
            idx = int(rng.choice(b, p=d2 / total))
        centers.append(idx)
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def fit_em(data, k: int, seed=None, *, tol: float = TOL, max_iter: int = MAX_ITER) -> Gmm:
    """Fit a ``k``-component full-covariance mixture by EM.

    Initialization is k-means++ seeding followed by one hard-assignment pass.
    Every M-step adds ``1e-6 * mean(data variance)`` to the covariance
    diagonals. Stops when the relative log-likelihood gain drops below
    ``tol`` or after ``max_iter`` iterations. The per-iteration total
    log-likelihoods are kept on ``Gmm.log_likelihoods``; a NaN entry marks
    the re-seeding of a collapsed component.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    b, d = x.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if b < k * (d + 1):
        raise DegenerateDataError(f"{b} points cannot support k={k} components in d={d}")
    var = x.var(axis=0)
    if not np.any(var > 0):
        raise DegenerateDataError("all data points are identical")
    reg = REG_SCALE * var.mean()
    rng = np.random.default_rng(seed)

    # seeding in standardized coordinates keeps mixed units (s, deg) comparable
    scale = np.sqrt(np.where(var > 0, var, 1.0))
    xs = (x - x.mean(axis=0)) / scale
    centers = xs[_kmeanspp(xs, k, rng)]
    nearest = np.argmin(((xs[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), axis=1)
    priors = np.empty(k)
    means = np.empty((k, d))
    covs = np.empty((k, d, d))
    for c in range(k):
        members = x[nearest == c]
        priors[c] = len(members) / b
        if len(members) == 0:
            # duplicate seeds; the collapse rescue re-seeds this one
            means[c] = x[rng.integers(b)]
            covs[c] = np.diag(var + reg)
            continue
        means[c] = members.mean(axis=0)
        diff = members - means[c]
        covs[c] = diff.T @ diff / len(members) + reg * np.eye(d)
    base_cov = np.diag(var + reg)

    history = em_loop(np.ascontiguousarray(x), priors, means, covs, reg, base_cov,
                      tol, max_iter, COLLAPSE_PRIOR)
    priors = priors / priors.sum()
    return Gmm(priors, means, covs, log_likelihoods=tuple(history.tolist()))
