"""Multivariate dynamic time warping and demonstration alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DemonstrationSet


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    """Demonstrations resampled onto the reference timeline.

    ``demos`` has shape (M, L_ref, n); index 0 is the reference itself.
    """

    reference_timestamps: np.ndarray
    demos: np.ndarray

    @property
    def dof(self) -> int:
        return self.demos.shape[2]

    @property
    def n_demos(self) -> int:
        return self.demos.shape[0]

    def pooled(self) -> np.ndarray:
        """All samples stacked as rows of ``(t, q1, ..., qn)``."""
        m, length, n = self.demos.shape
        t = np.tile(self.reference_timestamps, m)
        return np.column_stack([t, self.demos.reshape(m * length, n)])


def _as_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("series must be 1-D or 2-D")
    return x


def accumulated_cost(a, b) -> np.ndarray:
    """Accumulated DTW cost matrix, padded with an inf border row/column.

    Filled one anti-diagonal at a time so the inner update is vectorized.
    """
    a = _as_series(a)
    b = _as_series(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]} columns")
    la, lb = len(a), len(b)
    local = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    acc = np.full((la + 1, lb + 1), np.inf)
    acc[0, 0] = 0.0
    for s in range(la + lb - 1):
        i = np.arange(max(0, s - lb + 1), min(s, la - 1) + 1)
        j = s - i
        best = np.minimum(np.minimum(acc[i, j], acc[i, j + 1]), acc[i + 1, j])
        acc[i + 1, j + 1] = local[i, j] + best
    return acc


def dtw(a, b) -> tuple[float, list[tuple[int, int]]]:
    """Return ``(cost, path)`` of the optimal monotone alignment of ``a`` and ``b``."""
    acc = accumulated_cost(a, b)
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        # prefer the diagonal on ties
        steps = ((acc[i - 1, j - 1], i - 1, j - 1),
                 (acc[i - 1, j], i - 1, j),
                 (acc[i, j - 1], i, j - 1))
        _, i, j = min(steps, key=lambda s: s[0])
        path.append((i - 1, j - 1))
    path.reverse()
    return float(acc[-1, -1]), path


def dtw_path(a, b) -> list[tuple[int, int]]:
    """Optimal warping path between two (L, n) series under Euclidean local cost."""
    a = _as_series(a)
    b = _as_series(b)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("series need at least 2 samples")
    return dtw(a, b)[1]


def path_cost(a, b, path) -> float:
    a = _as_series(a)
    b = _as_series(b)
    idx = np.asarray(path)
    return float(np.linalg.norm(a[idx[:, 0]] - b[idx[:, 1]], axis=1).sum())


def warp_onto(reference, series, path) -> np.ndarray:
    """Collapse ``series`` onto the reference index: mean of all matched samples."""
    reference = _as_series(reference)
    series = _as_series(series)
    idx = np.asarray(path)
    out = np.zeros_like(reference)
    counts = np.zeros(len(reference))
    np.add.at(out, idx[:, 0], series[idx[:, 1]])
    np.add.at(counts, idx[:, 0], 1.0)
    return out / counts[:, None]


def align_set(demos: DemonstrationSet) -> AlignedDataset:
    """Warp every demonstration onto the timeline of the first one."""
    ref = demos.demos[0]
    aligned = [np.array(ref.joints)]
    for demo in demos.demos[1:]:
        path = dtw_path(ref.joints, demo.joints)
        aligned.append(warp_onto(ref.joints, demo.joints, path))
    return AlignedDataset(np.array(ref.timestamps), np.stack(aligned))
