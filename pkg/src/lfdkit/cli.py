"""Command-line interface: synth, train, reproduce, evaluate, compare.

Numeric results go to stdout and to ``--out`` files and depend only on the
inputs and ``--seed``. Wall-clock timings are reported on stderr so that
the numeric output stays byte-identical between runs.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .core import (DemonstrationError, ModelFormatError, format_number, load_demonstration_set,
                   load_model, save_model, trajectory_csv, write_demonstration, write_text_atomic)
from .optimize import SearchSpace, SpringObjective, bayes_opt_function, grid_search_function
from .pipeline import StageError, evaluate, fit_reference, reproduce, score, train
from .select import SelectionConfig
from .synth import synth_task

SEED_ENV = "LFDKIT_SEED"
DEFAULT_NOISE = "1,5,10,20"


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _default_seed() -> int:
    value = os.environ.get(SEED_ENV, "0")
    try:
        return int(value)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV} must be an integer, got {value!r}")


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else format_number(v) if isinstance(v, float)
                              else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        write_text_atomic(out, text)
    sys.stdout.write(text)


def _timing(label: str, seconds: float) -> None:
    print(f"{label}_wall_time_s={seconds:.3f}", file=sys.stderr)


def _selection(args) -> SelectionConfig:
    return SelectionConfig(k_min=args.kmin, k_max=args.kmax, seed=args.seed)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    demos = synth_task(args.dof, args.count, seed=args.seed)
    out = Path(args.out)
    for d in demos:
        write_demonstration(out / d.name, d)
    print(f"wrote {len(demos)} demonstrations ({demos.dof} DOF) to {out}")
    return 0


def cmd_train(args) -> int:
    demos = load_demonstration_set(args.demos)
    task = args.task or Path(args.demos).name
    model, report = train(demos, _selection(args), seed=args.seed, task=task)
    save_model(model, args.model)
    if args.out:
        write_text_atomic(args.out, trajectory_csv(model.gmr.timestamps, model.gmr.means))
    if args.trace:
        write_text_atomic(args.trace, report.trace.to_csv())
    rows = [("dof", model.dof), ("demonstrations", len(demos)), ("kstar", report.kstar),
            ("alpha_z", report.alpha_z), ("beta_z", report.alpha_z / 4), ("N", report.n_basis),
            ("bo_calls", report.bo_calls), ("bo_stop", report.bo_stop_reason),
            ("bo_cost", report.trace.best()[2])]
    sys.stdout.write(_csv(("key", "value"), rows))
    _timing("train", report.wall_time_s)
    return 0


def cmd_reproduce(args) -> int:
    model = load_model(args.model)
    start = args.start if args.start is not None else model.gmr.means[0]
    goal = args.goal if args.goal is not None else model.gmr.means[-1]
    traj = reproduce(model, start, goal, args.dt)
    if args.out:
        write_text_atomic(args.out, trajectory_csv(traj.t, traj.y))
    g, ej = score(model, traj, goal)
    sys.stdout.write(_csv(("key", "value"), [("steps", len(traj.t)), ("gmcc", g), ("e_j", ej)]))
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    rows = evaluate(model, args.noise_deg, reps=args.reps, seed=args.seed, dt=args.dt)
    header = ("noise_deg", "reps", "gmcc_mean", "gmcc_std", "ej_mean", "ej_std")
    _emit(_csv(header, [(r.noise_deg, r.reps, r.gmcc_mean, r.gmcc_std, r.ej_mean, r.ej_std)
                        for r in rows]), args.out)
    return 0


def cmd_compare(args) -> int:
    demos = load_demonstration_set(args.demos)
    ref = fit_reference(demos, _selection(args), seed=args.seed)
    space = SearchSpace()
    func = SpringObjective(ref.gmr)
    t0 = time.perf_counter()
    gs_a, gs_n, gs_min, gs_calls = grid_search_function(func, space)
    t1 = time.perf_counter()
    bo_a, bo_n, trace = bayes_opt_function(func, space, seed=args.seed)
    t2 = time.perf_counter()
    bo_min = trace.best()[2]
    header = ("method", "alpha_z", "N", "minimum", "calls", "rel_gap")
    rows = [("GS", gs_a, gs_n, gs_min, gs_calls, 0.0),
            ("BO", bo_a, bo_n, bo_min, trace.calls, (bo_min - gs_min) / abs(gs_min))]
    _emit(_csv(header, rows), args.out)
    if args.trace:
        write_text_atomic(args.trace, trace.to_csv())
    _timing("gs", t1 - t0)
    _timing("bo", t2 - t1)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfdkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (default: ${SEED_ENV} or 0)")

    def selection(p):
        p.add_argument("--kmin", type=int, default=2)
        p.add_argument("--kmax", type=int, default=9)

    p = sub.add_parser("synth", help="write a synthetic demonstration set")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dof", type=int, default=3)
    p.add_argument("--count", type=int, default=4, help="number of demonstrations")
    seeded(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="learn a motion model from demonstrations")
    p.add_argument("--demos", required=True, help="directory of demonstration CSV files")
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--out", help="optional GMR trajectory CSV (demonstration format)")
    p.add_argument("--trace", help="optional BO trace CSV")
    p.add_argument("--task", default="", help="task name stored with the model")
    selection(p)
    seeded(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reproduce", help="roll out a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--start", type=_vector, help="comma list of start angles (deg)")
    p.add_argument("--goal", type=_vector, help="comma list of goal angles (deg)")
    p.add_argument("--dt", type=float, default=None, help="step size (default: GMR step)")
    p.add_argument("--out", help="trajectory CSV")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("evaluate", help="noise-robustness table")
    p.add_argument("--model", required=True)
    p.add_argument("--noise-deg", type=_vector, default=_vector(DEFAULT_NOISE))
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", help="table CSV")
    seeded(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="grid search versus Bayesian optimization")
    p.add_argument("--demos", required=True)
    p.add_argument("--out", help="report CSV")
    p.add_argument("--trace", help="optional BO trace CSV")
    selection(p)
    seeded(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except (DemonstrationError, ModelFormatError, StageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
