"""Synthetic demonstration sets: multi-joint minimum-jerk reaches."""
from __future__ import annotations

import numpy as np

from .core import Demonstration, DemonstrationSet


def minimum_jerk(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def synth_task(n_dof: int = 3, n_demos: int = 4, seed: int = 0, *, duration: float = 3.0,
               dt: float = 0.01, noise_deg: float = 0.1, timing_jitter: float = 0.08
               ) -> DemonstrationSet:
    """Demonstrations of one reach with a via-bump per joint.

    Joint j follows ``y0 + (g - y0) * mj(s) + bump * 16 s^2 (1 - s)^2`` with
    ``mj`` the minimum-jerk profile. Each demonstration gets its own
    duration (within ``timing_jitter``), a smooth monotone time warp, a
    sub-degree offset of start and goal, and white measurement noise.
    """
    rng = np.random.default_rng(seed)
    y0 = rng.uniform(-90.0, 90.0, n_dof)
    amp = rng.uniform(40.0, 120.0, n_dof) * rng.choice([-1.0, 1.0], n_dof)
    bump = rng.uniform(-30.0, 30.0, n_dof)
    demos = []
    for m in range(n_demos):
        dur = duration * (1.0 + rng.uniform(-timing_jitter, timing_jitter))
        t = np.arange(int(round(dur / dt)) + 1) * dt
        u = t / t[-1]
        eps = rng.uniform(-0.3, 0.3)
        s = u + eps * np.sin(2 * np.pi * u) / (2 * np.pi)
        start = y0 + rng.normal(0.0, 0.5, n_dof)
        goal = y0 + amp + rng.normal(0.0, 0.5, n_dof)
        q = (start[None, :] + (goal - start)[None, :] * minimum_jerk(s)[:, None]
             + bump[None, :] * (16 * s ** 2 * (1 - s) ** 2)[:, None])
        q += rng.normal(0.0, noise_deg, q.shape)
        demos.append(Demonstration(t, q, name=f"demo_{m:02d}.csv"))
    return DemonstrationSet(tuple(demos))


def crisp_clusters(centers, n_points: int, seed=0, sigma: float = 1.0) -> np.ndarray:
    """Isotropic Gaussian blobs, equal share of ``n_points`` per center, rows shuffled."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    per = n_points // len(centers)
    x = np.vstack([rng.normal(c, sigma, (per, centers.shape[1])) for c in centers])
    return x[rng.permutation(len(x))]
