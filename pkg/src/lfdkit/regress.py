"""Gaussian mixture regression over (time, angle) per joint."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .align import AlignedDataset
from .core import GeneralizedTrajectory
from .mixture import Gmm, fit_em


@dataclass(frozen=True, eq=False)
class JointGmm:
    gmm: Gmm
    joint_index: int

    def __post_init__(self):
        if self.gmm.dim != 2:
            raise ValueError("joint mixtures live in (time, angle), d must be 2")
        if np.any(self.gmm.covariances[:, 0, 0] <= 0):
            raise ValueError("time variances must be positive")


def fit_joint_gmms(aligned: AlignedDataset, kstar: int, seed=0) -> list[JointGmm]:
    """One ``kstar``-component mixture per joint over the pooled (t, angle) samples."""
    m, length, n = aligned.demos.shape
    t = np.tile(aligned.reference_timestamps, m)
    out = []
    for j in range(n):
        data = np.column_stack([t, aligned.demos[:, :, j].reshape(-1)])
        out.append(JointGmm(fit_em(data, kstar, seed=[seed, j]), j))
    return out


def responsibilities(gmm: Gmm, t) -> np.ndarray:
    """h_i(t) for every query time, shape (T, K); rows sum to one."""
    t = np.asarray(t, dtype=float)
    mu = gmm.means[:, 0]
    var = gmm.covariances[:, 0, 0]
    with np.errstate(divide="ignore"):
        log_w = np.log(gmm.priors)
    lp = log_w[None, :] - 0.5 * (np.log(2 * np.pi * var)[None, :]
                                 + (t[:, None] - mu[None, :]) ** 2 / var[None, :])
    return np.exp(lp - logsumexp(lp, axis=1, keepdims=True))


def condition_on_time(gmm: Gmm, t) -> tuple[np.ndarray, np.ndarray]:
    """Conditional mean and variance of the angle given time."""
    t = np.asarray(t, dtype=float)
    h = responsibilities(gmm, t)
    mu_t, mu_y = gmm.means[:, 0], gmm.means[:, 1]
    s_tt = gmm.covariances[:, 0, 0]
    s_yt = gmm.covariances[:, 1, 0]
    s_yy = gmm.covariances[:, 1, 1]
    slope = s_yt / s_tt
    comp_mean = mu_y[None, :] + slope[None, :] * (t[:, None] - mu_t[None, :])
    comp_var = s_yy - slope * s_yt
    mean = (h * comp_mean).sum(axis=1)
    var = (h * (comp_var[None, :] + comp_mean ** 2)).sum(axis=1) - mean ** 2
    return mean, np.maximum(var, 0.0)


def gmr(gmms: list[JointGmm], timestamps, span: tuple[float, float] | None = None,
        ) -> GeneralizedTrajectory:
    """Generalized trajectory at ``timestamps``.

    ``span`` is the training time range; queries outside it are refused.
    Defaults to the span of ``timestamps`` itself.
    """
    t = np.asarray(timestamps, dtype=float)
    if span is not None:
        lo, hi = span
        tol = 1e-9 * max(1.0, abs(lo), abs(hi))
        if t.min() < lo - tol or t.max() > hi + tol:
            raise ValueError(f"query times [{t.min()}, {t.max()}] leave the training span [{lo}, {hi}]")
    ordered = sorted(gmms, key=lambda g: g.joint_index)
    means = np.empty((len(t), len(ordered)))
    variances = np.empty_like(means)
    for col, jg in enumerate(ordered):
        means[:, col], variances[:, col] = condition_on_time(jg.gmm, t)
    return GeneralizedTrajectory(t, means, variances)
