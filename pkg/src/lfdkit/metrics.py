"""Reproduction quality metrics."""
from __future__ import annotations

import numpy as np


def joint_error(target, actual) -> float:
    """Mean absolute difference between goal and reached joint angles (deg)."""
    target = np.asarray(target, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if target.shape != actual.shape:
        raise ValueError(f"dimension mismatch: {target.size} vs {actual.size}")
    return float(np.mean(np.abs(actual - target)))


def resample(traj, length: int) -> np.ndarray:
    """Linearly resample a (T, n) trajectory onto ``length`` evenly spaced phases."""
    traj = np.asarray(traj, dtype=float)
    if traj.ndim == 1:
        traj = traj[:, None]
    if len(traj) == length:
        return traj
    src = np.linspace(0.0, 1.0, len(traj))
    dst = np.linspace(0.0, 1.0, length)
    return np.column_stack([np.interp(dst, src, col) for col in traj.T])


def gmcc(reference, candidate) -> float:
    """Generalized multiple correlation between two multivariate trajectories.

    The candidate is mapped onto the reference by the least-squares affine
    map; the score is the square root of the fraction of the reference's
    total variance that map explains. Any nonsingular affine transform of
    the candidate leaves the score unchanged. Trajectories of different
    lengths are resampled to the shorter one first.
    """
    ref = np.asarray(reference, dtype=float)
    cand = np.asarray(candidate, dtype=float)
    if ref.ndim == 1:
        ref = ref[:, None]
    if cand.ndim == 1:
        cand = cand[:, None]
    if ref.shape[1] != cand.shape[1]:
        raise ValueError(f"dimension mismatch: {ref.shape[1]} vs {cand.shape[1]} joints")
    length = min(len(ref), len(cand))
    ref, cand = resample(ref, length), resample(cand, length)
    n = ref.shape[1]
    if length < n + 2:
        raise ValueError(f"need at least {n + 2} samples for {n} joints, got {length}")
    ref_c = ref - ref.mean(axis=0)
    if np.abs(ref_c).max() <= 1e-12 * max(1.0, np.abs(ref).max()):
        raise ValueError("degenerate reference: zero variance")
    total = float(np.sum(ref_c ** 2))
    cand_c = cand - cand.mean(axis=0)
    coef, *_ = np.linalg.lstsq(cand_c, ref_c, rcond=None)
    resid = ref_c - cand_c @ coef
    r2 = 1.0 - float(np.sum(resid ** 2)) / total
    return float(np.sqrt(min(max(r2, 0.0), 1.0)))
