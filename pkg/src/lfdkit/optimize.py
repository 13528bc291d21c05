"""Choosing the spring stiffness and basis count.

Bayesian optimization with a Gaussian-process surrogate and expected
improvement, plus the exhaustive grid search it is benchmarked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.special import ndtr

from .core import GeneralizedTrajectory
from .spring import (activations, basis_layout, canonical_phase, forcing_target, integrate,
                     step_count, _lwr_weights, _normalized_sum, DEGENERATE_AMPLITUDE)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SearchSpace:
    alpha_min: float = 1.0
    alpha_max: float = 60.0
    alpha_steps: int = 75
    n_min: int = 2
    n_max: int = 51

    def __post_init__(self):
        if not 0 < self.alpha_min < self.alpha_max:
            raise ValueError("alpha range must be positive and non-empty")
        if self.alpha_steps < 2:
            raise ValueError("alpha grid needs at least 2 points")
        if not 2 <= self.n_min <= self.n_max:
            raise ValueError("basis range must satisfy 2 <= n_min <= n_max")

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.alpha_steps)

    @property
    def basis_counts(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def size(self) -> int:
        return self.alpha_steps * (self.n_max - self.n_min + 1)

    def grid(self) -> np.ndarray:
        """All (alpha_z, N) pairs, ordered by alpha then N."""
        a, n = np.meshgrid(self.alphas, self.basis_counts, indexing="ij")
        return np.column_stack([a.ravel(), n.ravel()])

    def normalize(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.column_stack([points[:, 0] / self.alpha_max, points[:, 1] / self.n_max])


@dataclass
class BoTrace:
    queries: list = field(default_factory=list)
    best_so_far: list = field(default_factory=list)
    stop_reason: str = ""
    seed: int | None = None
    jitter: float = 0.0

    def add(self, alpha_z: float, n_basis: int, value: float) -> None:
        self.queries.append(((float(alpha_z), int(n_basis)), float(value)))
        prev = self.best_so_far[-1] if self.best_so_far else math.inf
        self.best_so_far.append(min(prev, float(value)))

    @property
    def calls(self) -> int:
        return len(self.queries)

    def best(self) -> tuple[float, int, float]:
        i = int(np.argmin([v for _, v in self.queries]))
        (a, n), v = self.queries[i]
        return a, n, v

    def to_csv(self) -> str:
        lines = ["iteration,alpha_z,N,cost,best"]
        for i, (((a, n), v), b) in enumerate(zip(self.queries, self.best_so_far)):
            lines.append(f"{i},{a!r},{n},{v!r},{b!r}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Objective


class SpringObjective:
    """Tracking cost of the spring model fitted to a GMR for given (alpha_z, N).

    cost = sqrt(sum_t ||y(t) - y_G(t)||^2 / T) + ||y(T) - y_G(T)||

    Per-N basis activations are cached, so repeated calls are cheap.
    """

    def __init__(self, gmr: GeneralizedTrajectory, dt: float | None = None):
        self.t = np.asarray(gmr.timestamps, dtype=float)
        self.y = np.asarray(gmr.means, dtype=float)
        if len(self.t) < 3:
            raise ValueError("GMR needs at least 3 samples")
        self.tau = float(self.t[-1] - self.t[0])
        self.dt = float(np.median(np.diff(self.t))) if dt is None else float(dt)
        self.y0 = self.y[0]
        self.g = self.y[-1]
        amp = self.g - self.y0
        self.active = np.abs(amp) >= DEGENERATE_AMPLITUDE
        self.amp = amp
        self.x_fit = canonical_phase(self.t - self.t[0], self.tau)
        self.steps = step_count(self.tau, self.dt)
        self.t_roll = np.arange(self.steps) * self.dt
        self.x_roll = canonical_phase(self.t_roll, self.tau)
        rel = self.t - self.t[0]
        self._same_grid = self.steps == len(self.t) and np.allclose(self.t_roll, rel, atol=1e-9 * max(1.0, self.tau))
        self._cache: dict[int, tuple] = {}

    def _basis(self, n_basis: int):
        if n_basis not in self._cache:
            centers, widths = basis_layout(n_basis)
            self._cache[n_basis] = (activations(centers, widths, self.x_fit),
                                    activations(centers, widths, self.x_roll))
        return self._cache[n_basis]

    def weights(self, alpha_z: float, n_basis: int) -> np.ndarray:
        """(N, n) weights; zero columns for joints whose start equals the goal."""
        psi_fit, _ = self._basis(n_basis)
        target = forcing_target(self.y, self.t, alpha_z)
        s = self.x_fit[:, None] * np.where(self.active, self.amp, 0.0)[None, :]
        w = _lwr_weights(psi_fit, s, target)
        w[:, ~self.active] = 0.0
        return w

    def trajectory(self, alpha_z: float, n_basis: int) -> np.ndarray:
        """Rollout from the GMR endpoints, sampled at the GMR timestamps."""
        _, psi_roll = self._basis(n_basis)
        w = self.weights(alpha_z, n_basis)
        f = _normalized_sum(psi_roll, w) * self.amp[None, :] * self.x_roll[:, None]
        f[:, ~self.active] = 0.0
        y, _ = integrate(self.tau, alpha_z, self.y0, self.g, f, self.dt)
        if self._same_grid:
            return y
        rel = self.t - self.t[0]
        return np.column_stack([np.interp(rel, self.t_roll, col) for col in y.T])

    def __call__(self, alpha_z: float, n_basis: int) -> float:
        y = self.trajectory(alpha_z, int(n_basis))
        diff = y - self.y
        rmse = math.sqrt(float(np.sum(diff ** 2)) / len(self.t))
        return rmse + float(np.linalg.norm(diff[-1]))


def objective(alpha_z: float, n_basis: int, gmr: GeneralizedTrajectory) -> float:
    return SpringObjective(gmr)(alpha_z, n_basis)


# ---------------------------------------------------------------------------
# Gaussian process surrogate


def expected_improvement(mu, sigma, best):
    """EI for minimization: E[max(best - Y, 0)] with Y ~ N(mu, sigma^2)."""
    mu, sigma = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float))
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    gain = best - mu
    pos = sigma > 0
    u = gain / np.where(pos, sigma, 1.0)
    with np.errstate(over="ignore"):
        ei = gain * ndtr(u) + sigma * INV_SQRT_2PI * np.exp(-0.5 * u * u)
    ei = np.maximum(np.where(pos, ei, gain), 0.0)
    return float(ei) if ei.ndim == 0 else ei


class GaussianProcess:
    """Squared-exponential GP with a constant mean at the data average.

    Amplitude is the sample variance of the targets; the diagonal jitter
    (relative to the amplitude) escalates tenfold until the Cholesky
    factorization succeeds.
    """

    def __init__(self, length_scale: float = 0.2, jitter: float = 1e-8, max_jitter: float = 1e-2):
        self.length_scale = length_scale
        self.jitter0 = jitter
        self.max_jitter = max_jitter

    def kernel(self, a, b):
        d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        return self.amplitude * np.exp(-0.5 * d2 / self.length_scale ** 2)

    def fit(self, x, y) -> "GaussianProcess":
        self.x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.mean = float(y.mean())
        var = float(y.var())
        self.amplitude = var if var > 0 else 1.0
        k = self.kernel(self.x, self.x)
        jitter = self.jitter0
        while True:
            try:
                self.factor = cho_factor(k + jitter * self.amplitude * np.eye(len(k)), lower=True)
                break
            except LinAlgError:
                jitter *= 10
                if jitter > self.max_jitter:
                    raise
        self.jitter = jitter
        self.alpha = cho_solve(self.factor, y - self.mean)
        return self

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        ks = self.kernel(x, self.x)
        mu = self.mean + ks @ self.alpha
        v = cho_solve(self.factor, ks.T)
        var = self.amplitude - np.einsum("ij,ji->i", ks, v)
        return mu, np.sqrt(np.maximum(var, 0.0))


# ---------------------------------------------------------------------------
# Optimizers


def _initial_design(space: SearchSpace) -> list[tuple[int, int]]:
    """Grid indices of the four corners and the center."""
    ia, ib = space.alpha_steps - 1, space.n_max - space.n_min
    return [(0, 0), (0, ib), (ia, 0), (ia, ib), (ia // 2, ib // 2)]


def bayes_opt_function(func: Callable[[float, int], float], space: SearchSpace | None = None,
                       seed: int = 0, max_calls: int = 100,
                       length_scale: float = 0.2) -> tuple[float, int, BoTrace]:
    """Minimize ``func(alpha_z, N)`` over ``space`` by GP/EI.

    Each iteration scans EI over the whole grid (ties go to the lowest
    alpha, then the lowest N) and stops once the proposed grid point equals
    the previous query, or after ``max_calls`` evaluations. The objective is
    deterministic, so a repeated point is never re-evaluated. ``seed`` is
    recorded for reproducibility; the procedure itself is deterministic.
    """
    space = space or SearchSpace()
    grid = space.grid()
    unit = space.normalize(grid)
    n_count = space.n_max - space.n_min + 1
    trace = BoTrace(seed=seed)
    seen: dict[int, float] = {}

    def evaluate(idx: int) -> None:
        a, n = grid[idx]
        value = float(func(float(a), int(n)))
        seen[idx] = value
        trace.add(a, int(n), value)

    for ia, ib in _initial_design(space):
        idx = ia * n_count + ib
        if idx not in seen and trace.calls < max_calls:
            evaluate(idx)

    gp = GaussianProcess(length_scale=length_scale)
    last = None
    while True:
        if trace.calls >= max_calls:
            trace.stop_reason = "max_calls"
            break
        keys = list(seen)
        gp.fit(unit[keys], [seen[k] for k in keys])
        trace.jitter = max(trace.jitter, gp.jitter)
        mu, sigma = gp.predict(unit)
        ei = expected_improvement(mu, sigma, min(seen.values()))
        proposal = int(np.argmax(ei))  # first maximum = lowest alpha, then N
        if proposal == last:
            trace.stop_reason = "repeated_query"
            break
        last = proposal
        if proposal in seen:
            # re-querying a known point cannot change the surrogate
            trace.stop_reason = "repeated_query"
            break
        evaluate(proposal)
    alpha, n, _ = trace.best()
    return alpha, n, trace


def bayes_opt(gmr: GeneralizedTrajectory, space: SearchSpace | None = None, seed: int = 0,
              max_calls: int = 100) -> tuple[float, int, BoTrace]:
    """Bayesian optimization of (alpha_z, N) for the spring fit to ``gmr``."""
    return bayes_opt_function(SpringObjective(gmr), space, seed=seed, max_calls=max_calls)


def grid_search_function(func, space: SearchSpace | None = None):
    """Exhaustive minimization; returns (alpha_z, N, best value, evaluations)."""
    space = space or SearchSpace()
    best = (math.inf, None)
    count = 0
    for a, n in space.grid():
        v = float(func(float(a), int(n)))
        count += 1
        if v < best[0]:
            best = (v, (float(a), int(n)))
    (a, n) = best[1]
    return a, n, best[0], count


def grid_search(gmr: GeneralizedTrajectory, space: SearchSpace | None = None):
    return grid_search_function(SpringObjective(gmr), space)
