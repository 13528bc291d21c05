"""End-to-end training and reproduction."""
from __future__ import annotations

import datetime as _dt
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from .align import AlignedDataset, align_set
from .core import DemonstrationSet, GeneralizedTrajectory, MotionModel
from .metrics import gmcc, joint_error
from .optimize import BoTrace, SearchSpace, bayes_opt
from .regress import fit_joint_gmms, gmr
from .select import SelectionConfig, SelectionRecord, select_k
from .spring import Rollout, fit_spring, rollout_many


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage attached
        raise StageError(name, exc) from exc


@dataclass
class TrainReport:
    kstar: int
    alpha_z: float
    n_basis: int
    bo_calls: int
    bo_stop_reason: str
    wall_time_s: float
    selection: list[SelectionRecord] = field(default_factory=list, repr=False)
    trace: BoTrace | None = field(default=None, repr=False)
    aligned: AlignedDataset | None = field(default=None, repr=False)


def training_date() -> str:
    """UTC date of training; honours SOURCE_DATE_EPOCH for reproducible files."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Reference:
    aligned: AlignedDataset
    kstar: int
    selection: list[SelectionRecord]
    gmms: list
    gmr: GeneralizedTrajectory


def fit_reference(demos: DemonstrationSet, selection: SelectionConfig | None = None,
                  seed: int = 0) -> Reference:
    """align -> select k -> per-joint GMMs -> GMR."""
    selection = replace(selection or SelectionConfig(), seed=seed)
    with _stage("align"):
        aligned = align_set(demos)
    with _stage("select"):
        kstar, records = select_k(aligned.pooled(), selection)
    with _stage("mixture"):
        gmms = fit_joint_gmms(aligned, kstar, seed)
    with _stage("regress"):
        t = aligned.reference_timestamps
        reference = gmr(gmms, t, span=(t[0], t[-1]))
    return Reference(aligned, kstar, records, gmms, reference)


def train(demos: DemonstrationSet, selection: SelectionConfig | None = None,
          space: SearchSpace | None = None, seed: int = 0, task: str = "") -> tuple[MotionModel, TrainReport]:
    """Reference fit, then BO over (alpha_z, N), then the per-joint spring fit."""
    start = time.perf_counter()
    space = space or SearchSpace()
    ref = fit_reference(demos, selection, seed)
    reference = ref.gmr
    with _stage("optimize"):
        alpha_z, n_basis, trace = bayes_opt(reference, space, seed=seed)
    with _stage("spring"):
        springs = [fit_spring(reference.means[:, j], reference.timestamps, alpha_z, n_basis)
                   for j in range(reference.dof)]
    provenance = {
        "task": task,
        "demonstrations": len(demos),
        "demonstration_files": [d.name for d in demos],
        "trained_at": training_date(),
    }
    model = MotionModel(dof=demos.dof, kstar=ref.kstar, gmms=[g.gmm for g in ref.gmms], gmr=reference,
                        springs=springs, alpha_z=float(alpha_z), n_basis=int(n_basis),
                        train_seed=int(seed), provenance=provenance)
    report = TrainReport(kstar=ref.kstar, alpha_z=float(alpha_z), n_basis=int(n_basis),
                         bo_calls=trace.calls, bo_stop_reason=trace.stop_reason,
                         wall_time_s=time.perf_counter() - start, selection=ref.selection,
                         trace=trace, aligned=ref.aligned)
    return model, report


def default_dt(model: MotionModel) -> float:
    return float(np.median(np.diff(model.gmr.timestamps)))


def reproduce(model: MotionModel, start, goal, dt: float | None = None) -> Rollout:
    start = np.asarray(start, dtype=float).reshape(-1)
    goal = np.asarray(goal, dtype=float).reshape(-1)
    if start.size != model.dof or goal.size != model.dof:
        raise ValueError(f"start/goal need {model.dof} joint angles, got {start.size}/{goal.size}")
    return rollout_many(model.springs, start, goal, dt or default_dt(model))


def score(model: MotionModel, traj: Rollout, goal) -> tuple[float, float]:
    """(GMCC against the stored GMR, e_j against ``goal``)."""
    return gmcc(model.gmr.means, traj.y), joint_error(goal, traj.y[-1])


@dataclass
class NoiseRow:
    noise_deg: float
    reps: int
    gmcc_mean: float
    gmcc_std: float
    ej_mean: float
    ej_std: float


def evaluate(model: MotionModel, noise_levels, reps: int = 30, seed: int = 0,
             dt: float | None = None) -> list[NoiseRow]:
    """Reproductions from noised GMR starts toward the GMR goal, per noise level."""
    gmr_traj: GeneralizedTrajectory = model.gmr
    start0 = gmr_traj.means[0]
    goal = gmr_traj.means[-1]
    rows = []
    for level, sigma in enumerate(noise_levels):
        rng = np.random.default_rng([seed, level])
        scores = np.empty((reps, 2))
        for r in range(reps):
            start = start0 + rng.normal(0.0, sigma, model.dof) if sigma > 0 else start0
            traj = reproduce(model, start, goal, dt)
            scores[r] = score(model, traj, goal)
        std = scores.std(axis=0, ddof=1) if reps > 1 else np.zeros(2)
        rows.append(NoiseRow(float(sigma), reps, float(scores[:, 0].mean()), float(std[0]),
                             float(scores[:, 1].mean()), float(std[1])))
    return rows
