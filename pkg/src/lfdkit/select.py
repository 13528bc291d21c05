"""Choosing the number of mixture components by cross-validated JS divergence.

For every candidate k the data is split in half 50 times, a mixture is fitted
to each half and the Jensen-Shannon divergence between the two fits is
recorded. The candidate with the lowest mean divergence starts as the
incumbent; the remaining candidates can displace it through a pair of
one-tailed Welch t-tests, falling back to the smaller spread when the tests
are inconclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mixture import Gmm, fit_em, log_density, sample_from_draws

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SelectionConfig:
    k_min: int = 2
    k_max: int = 9
    folds: int = 50
    alpha: float = 0.05
    mc_samples: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.k_min <= self.k_max:
            raise ValueError(f"need 2 <= k_min <= k_max, got {self.k_min}, {self.k_max}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.folds < 2:
            raise ValueError("at least 2 folds are needed for a variance estimate")


@dataclass
class SelectionRecord:
    """Divergence statistics for one candidate k.

    ``h1_p``/``h3_p`` are the Welch p-values from the comparison against the
    incumbent at the time k was visited (None when k was not tested), and
    ``replaced`` tells whether k became the incumbent.
    """

    k: int
    js_samples: np.ndarray
    mean: float
    std: float
    h1_p: float | None = None
    h3_p: float | None = None
    replaced: bool = False
    incumbent_before: int | None = field(default=None)


# ---------------------------------------------------------------------------
# Jensen-Shannon divergence


def js_divergence(p: Gmm, q: Gmm, mc_samples: int = 2000, seed=None, *,
                  return_se: bool = False):
    """Monte Carlo estimate of JS(P, Q) in nats, clamped to [0, ln 2].

    Both mixtures are sampled with the same uniform/normal draws, so swapping
    the arguments yields the identical estimate. With ``return_se`` the
    standard error of the (unclamped) estimate is returned as well.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    rng = np.random.default_rng(seed)
    u = rng.random(mc_samples)
    z = rng.standard_normal((mc_samples, p.dim))
    xp = sample_from_draws(p, u, z)
    xq = sample_from_draws(q, u, z)

    lp_p, lq_p = log_density(p, xp), log_density(q, xp)
    lp_q, lq_q = log_density(p, xq), log_density(q, xq)
    # log m = log(0.5 p + 0.5 q)
    term_p = lp_p - (np.logaddexp(lp_p, lq_p) - LN2)
    term_q = lq_q - (np.logaddexp(lp_q, lq_q) - LN2)
    est = 0.5 * term_p.mean() + 0.5 * term_q.mean()
    js = min(max(float(est), 0.0), LN2)
    if not return_se:
        return js
    se = 0.5 * math.sqrt(term_p.var(ddof=1) / mc_samples + term_q.var(ddof=1) / mc_samples)
    return js, se


# ---------------------------------------------------------------------------
# Student t distribution via the regularized incomplete beta function


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, 10001):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * betainc(0.5 * df, 0.5, x)
    return tail if t > 0 else 1.0 - tail


def student_t_cdf(t: float, df: float) -> float:
    return 1.0 - student_t_sf(t, df)


def welch_one_tailed(mean_a, std_a, n_a, mean_b, std_b, n_b) -> float:
    """p-value for H0: mu_a - mu_b <= 0 against mu_a > mu_b.

    Sample standard deviations are expected (ddof=1). When both spreads are
    zero the statistic is +-inf, or 0 when the means tie (p = 0.5).
    """
    if n_a < 2 or n_b < 2:
        raise ValueError("each sample needs at least 2 observations")
    if std_a < 0 or std_b < 0:
        raise ValueError("standard deviations must be non-negative")
    va = std_a * std_a / n_a
    vb = std_b * std_b / n_b
    diff = mean_a - mean_b
    if va + vb == 0.0:
        if diff == 0.0:
            return 0.5
        return 0.0 if diff > 0 else 1.0
    t = diff / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va * va / (n_a - 1) + vb * vb / (n_b - 1))
    return min(max(student_t_sf(t, df), 0.0), 1.0)


# ---------------------------------------------------------------------------
# Selection


def candidate_statistics(data, k: int, cfg: SelectionConfig) -> SelectionRecord:
    """Cross-validated JS divergences for one candidate k."""
    x = np.asarray(data, dtype=float)
    half = len(x) // 2
    values = np.empty(cfg.folds)
    for fold in range(cfg.folds):
        key = [cfg.seed, k, fold]
        perm = np.random.default_rng(key + [0]).permutation(len(x))
        g1 = fit_em(x[perm[:half]], k, seed=key + [1])
        g2 = fit_em(x[perm[half:2 * half]], k, seed=key + [2])
        values[fold] = js_divergence(g1, g2, cfg.mc_samples, seed=key + [3])
    return SelectionRecord(k=k, js_samples=values, mean=float(values.mean()),
                           std=float(values.std(ddof=1)))


def choose_k(records: list[SelectionRecord], alpha: float = 0.05) -> int:
    """Arbitrate between candidates given their divergence statistics.

    Mutates the records' test fields as a trace of the decisions.
    """
    by_k = {r.k: r for r in sorted(records, key=lambda r: r.k)}
    best = min(by_k.values(), key=lambda r: (r.mean, r.k)).k
    for k, rec in by_k.items():
        if k == best:
            continue
        cur = by_k[best]
        n = len(rec.js_samples)
        n_best = len(cur.js_samples)
        rec.incumbent_before = best
        # H1: JS(k) - JS(k*) <= 0; rejection means k is worse
        rec.h1_p = welch_one_tailed(rec.mean, rec.std, n, cur.mean, cur.std, n_best)
        if rec.h1_p < alpha:
            continue
        # H3: JS(k*) - JS(k) <= 0; rejection means k is better
        rec.h3_p = welch_one_tailed(cur.mean, cur.std, n_best, rec.mean, rec.std, n)
        if rec.h3_p < alpha or rec.std < cur.std:
            rec.replaced = True
            best = k
    return best


def select_k(data, cfg: SelectionConfig | None = None) -> tuple[int, list[SelectionRecord]]:
    """Pick the component count for ``data`` (rows are samples).

    Returns the selected k and one record per candidate, ascending in k.
    """
    cfg = cfg or SelectionConfig()
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    d = x.shape[1]
    if len(x) // 2 < cfg.k_max * (d + 1):
        raise ValueError(
            f"{len(x)} samples are too few: each half needs {cfg.k_max * (d + 1)} "
            f"points for k_max={cfg.k_max} in d={d}")
    if cfg.k_min == cfg.k_max:
        return cfg.k_min, []
    records = [candidate_statistics(x, k, cfg) for k in range(cfg.k_min, cfg.k_max + 1)]
    return choose_k(records, cfg.alpha), records
