"""Domain types, demonstration ingestion and model persistence."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class DemonstrationError(ValueError):
    """Raised when a demonstration file or set violates the input contract."""


class ModelFormatError(ValueError):
    """Raised when a model file cannot be loaded."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Demonstration:
    """Time-stamped joint angles (seconds, degrees)."""

    timestamps: np.ndarray
    joints: np.ndarray
    name: str = ""

    def __post_init__(self):
        t = _frozen(self.timestamps)
        q = _frozen(self.joints)
        if q.ndim == 1:
            q = _frozen(q[:, None])
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "joints", q)
        label = self.name or "<demonstration>"
        if t.ndim != 1 or q.ndim != 2 or len(t) != len(q):
            raise DemonstrationError(f"{label}: timestamps and joints have mismatched shapes")
        if len(t) < 2:
            raise DemonstrationError(f"{label}: at least 2 samples required")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(q))):
            raise DemonstrationError(f"{label}: non-finite values")
        if np.any(np.diff(t) <= 0):
            raise DemonstrationError(f"{label}: non-monotone timestamps")

    @property
    def dof(self) -> int:
        return self.joints.shape[1]

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True, eq=False)
class DemonstrationSet:
    demos: tuple

    def __post_init__(self):
        demos = tuple(self.demos)
        object.__setattr__(self, "demos", demos)
        if len(demos) < 2:
            raise DemonstrationError(f"at least 2 demonstrations required, got {len(demos)}")
        dofs = {d.dof for d in demos}
        if len(dofs) != 1:
            detail = ", ".join(f"{d.name or i}: {d.dof}" for i, d in enumerate(demos))
            raise DemonstrationError(f"inconsistent DOF across demonstrations ({detail})")

    @property
    def dof(self) -> int:
        return self.demos[0].dof

    def __len__(self) -> int:
        return len(self.demos)

    def __iter__(self):
        return iter(self.demos)


@dataclass(frozen=True, eq=False)
class GeneralizedTrajectory:
    """Per-step mean joint vector produced by GMR.

    ``variances`` holds the conditional variances; it is kept for
    diagnostics only and never used downstream.
    """

    timestamps: np.ndarray
    means: np.ndarray
    variances: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "timestamps", _frozen(self.timestamps))
        means = np.asarray(self.means, dtype=float)
        object.__setattr__(self, "means", _frozen(means[:, None] if means.ndim == 1 else means))
        if self.variances is not None:
            object.__setattr__(self, "variances", _frozen(self.variances))
        if self.means.shape[0] != len(self.timestamps):
            raise ValueError("GMR means and timestamps differ in length")
        if not np.all(np.isfinite(self.means)):
            raise ValueError("GMR means must be finite")

    @property
    def dof(self) -> int:
        return self.means.shape[1]

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True, eq=False)
class MotionModel:
    """Everything needed to reproduce a learned motion."""

    dof: int
    kstar: int
    gmms: tuple
    gmr: GeneralizedTrajectory
    springs: tuple
    alpha_z: float
    n_basis: int
    train_seed: int
    provenance: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "gmms", tuple(self.gmms))
        object.__setattr__(self, "springs", tuple(self.springs))
        validate_model(self)


def validate_model(model: MotionModel) -> None:
    if not (len(model.springs) == model.dof == len(model.gmms)):
        raise ModelFormatError(
            f"dof={model.dof} but {len(model.gmms)} GMMs and {len(model.springs)} spring models")
    if not (model.alpha_z > 0 and math.isfinite(model.alpha_z)):
        raise ModelFormatError(f"alpha_z must be positive, got {model.alpha_z}")
    if model.n_basis < 2:
        raise ModelFormatError(f"n_basis must be >= 2, got {model.n_basis}")
    if model.kstar < 1:
        raise ModelFormatError(f"kstar must be >= 1, got {model.kstar}")
    if model.gmr.dof != model.dof:
        raise ModelFormatError("GMR dimension does not match dof")
    for j, s in enumerate(model.springs):
        if s.beta_z != s.alpha_z / 4:
            raise ModelFormatError(f"spring {j}: beta_z must equal alpha_z/4")
        if s.alpha_z != model.alpha_z:
            raise ModelFormatError(f"spring {j}: alpha_z differs from the model's shared alpha_z")
        if s.forcing.n_basis != model.n_basis:
            raise ModelFormatError(f"spring {j}: basis count differs from the model's n_basis")


# ---------------------------------------------------------------------------
# Demonstration CSV


def read_demonstration(path) -> Demonstration:
    path = Path(path)
    name = path.name
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DemonstrationError(f"{name}:1: empty file") from None
        header = [h.strip() for h in header]
        n = len(header) - 1
        expected = ["t"] + [f"j{i}" for i in range(1, n + 1)]
        if n < 1 or header != expected:
            raise DemonstrationError(
                f"{name}:1: malformed header {','.join(header)!r}, expected 't,j1,...,jn'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                raise DemonstrationError(f"{name}:{lineno}: empty row")
            if len(row) != n + 1:
                raise DemonstrationError(
                    f"{name}:{lineno}: expected {n + 1} columns, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DemonstrationError(f"{name}:{lineno}: non-numeric value") from None
            if not all(math.isfinite(v) for v in vals):
                raise DemonstrationError(f"{name}:{lineno}: non-finite value")
            if rows and vals[0] <= rows[-1][0]:
                raise DemonstrationError(f"{name}:{lineno}: non-monotone timestamps")
            rows.append(vals)
    if len(rows) < 2:
        raise DemonstrationError(f"{name}: at least 2 samples required, got {len(rows)}")
    data = np.array(rows)
    return Demonstration(data[:, 0], data[:, 1:], name=name)


def load_demonstration_set(source) -> DemonstrationSet:
    """Load demonstrations from a directory of ``*.csv`` files or a list of paths.

    Files from a directory are taken in lexical order; the first one becomes
    the alignment reference.
    """
    if isinstance(source, (str, os.PathLike)):
        root = Path(source)
        if not root.is_dir():
            raise DemonstrationError(f"{root}: not a directory")
        paths = sorted(root.glob("*.csv"))
    else:
        paths = [Path(p) for p in source]
    demos = [read_demonstration(p) for p in paths]
    if len(demos) < 2:
        raise DemonstrationError(f"at least 2 demonstrations required, found {len(demos)}")
    return DemonstrationSet(tuple(demos))


def format_number(x: float) -> str:
    return repr(float(x))


def trajectory_csv(timestamps, joints, extra: dict | None = None) -> str:
    """Render a trajectory in the demonstration CSV format.

    ``extra`` maps additional column names to (T,) or (T, n) arrays; each
    gets expanded as ``name1..namen`` when 2-D.
    """
    joints = np.asarray(joints, dtype=float)
    if joints.ndim == 1:
        joints = joints[:, None]
    n = joints.shape[1]
    header = ["t"] + [f"j{i}" for i in range(1, n + 1)]
    cols = [np.asarray(timestamps, dtype=float)[:, None], joints]
    for key, val in (extra or {}).items():
        val = np.asarray(val, dtype=float)
        if val.ndim == 1:
            header.append(key)
            cols.append(val[:, None])
        else:
            header += [f"{key}{i}" for i in range(1, val.shape[1] + 1)]
            cols.append(val)
    table = np.hstack(cols)
    lines = [",".join(header)]
    lines += [",".join(format_number(v) for v in row) for row in table]
    return "\n".join(lines) + "\n"


def write_text_atomic(path, text: str) -> None:
    """Write ``text`` via a temporary file and rename, so no partial file is left."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_demonstration(path, demo: Demonstration) -> None:
    write_text_atomic(path, trajectory_csv(demo.timestamps, demo.joints))


# ---------------------------------------------------------------------------
# Model persistence


def _gmm_to_dict(gmm) -> dict:
    return {
        "priors": gmm.priors.tolist(),
        "means": gmm.means.tolist(),
        "covariances": gmm.covariances.tolist(),
    }


def _spring_to_dict(s) -> dict:
    ft = s.forcing
    return {
        "tau": s.tau,
        "alpha_z": s.alpha_z,
        "beta_z": s.beta_z,
        "g": s.g,
        "y0": s.y0,
        "forcing_enabled": s.forcing_enabled,
        "forcing": {
            "alpha_x": ft.alpha_x,
            "centers": ft.centers.tolist(),
            "widths": ft.widths.tolist(),
            "weights": ft.weights.tolist(),
        },
    }


def model_to_dict(model: MotionModel) -> dict:
    gmr = model.gmr
    return {
        "format_version": model.format_version,
        "dof": model.dof,
        "kstar": model.kstar,
        "alpha_z": model.alpha_z,
        "n_basis": model.n_basis,
        "train_seed": model.train_seed,
        "provenance": model.provenance,
        "gmms": [_gmm_to_dict(g) for g in model.gmms],
        "gmr": {
            "timestamps": gmr.timestamps.tolist(),
            "means": gmr.means.tolist(),
            "variances": None if gmr.variances is None else gmr.variances.tolist(),
        },
        "springs": [_spring_to_dict(s) for s in model.springs],
    }


def model_from_dict(doc: dict) -> MotionModel:
    from .mixture import Gmm
    from .spring import ForcingTerm, SpringModel

    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {version!r} (this build reads version {FORMAT_VERSION})")
    try:
        gmms = [Gmm(np.array(g["priors"]), np.array(g["means"]), np.array(g["covariances"]))
                for g in doc["gmms"]]
        springs = []
        for s in doc["springs"]:
            f = s["forcing"]
            springs.append(SpringModel(
                tau=float(s["tau"]), alpha_z=float(s["alpha_z"]), beta_z=float(s["beta_z"]),
                g=float(s["g"]), y0=float(s["y0"]),
                forcing=ForcingTerm(np.array(f["centers"], dtype=float),
                                    np.array(f["widths"], dtype=float),
                                    np.array(f["weights"], dtype=float),
                                    float(f["alpha_x"])),
                forcing_enabled=bool(s["forcing_enabled"])))
        g = doc["gmr"]
        gmr = GeneralizedTrajectory(
            np.array(g["timestamps"], dtype=float), np.array(g["means"], dtype=float),
            None if g.get("variances") is None else np.array(g["variances"], dtype=float))
        return MotionModel(
            dof=int(doc["dof"]), kstar=int(doc["kstar"]), gmms=gmms, gmr=gmr,
            springs=springs, alpha_z=float(doc["alpha_z"]), n_basis=int(doc["n_basis"]),
            train_seed=int(doc["train_seed"]), provenance=dict(doc.get("provenance") or {}),
            format_version=version)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid model document: {exc}") from exc


def save_model(model: MotionModel, path) -> None:
    validate_model(model)
    text = json.dumps(model_to_dict(model), indent=1, sort_keys=True, allow_nan=False)
    write_text_atomic(path, text + "\n")


def load_model(path) -> MotionModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top-level JSON object expected")
    return model_from_dict(doc)
