"""Command-line interface.

Subcommands: ``synth`` (write a ground-truth dataset), ``diagonalize``
(emit the joint basis, diagonals, and objective trace), ``features``
(export a feature CSV), ``evaluate`` (full cross-validated experiment),
``inspect`` (commutation residual and spectral summary).  Every failure
exits nonzero with a single ``error:<category>: <message>`` line on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import data_io, synth
from .errors import CondiagError
from .evaluation import CVConfig
from .features import eigen_features, joint_features
from .joint_diag import JointDiagConfig, run
from .matrix_core import commutation_residual

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _add_joint_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("joint diagonalization")
    g.add_argument("--off-tol", type=float, default=1e-12, help="convergence target on the relative off ratio")
    g.add_argument("--rotation-tol", type=float, default=1e-10, help="skip rotations with |sin theta| below this")
    g.add_argument("--max-sweeps", type=int, default=100)
    g.add_argument("--no-canonicalize", action="store_true", help="keep the raw column order/sign of the basis")
    g.add_argument("--unit-frobenius", action="store_true", help="weight the objective by per-matrix unit Frobenius rescaling")
    g.add_argument("--verbose", action="store_true", help="per-sweep diagnostics on stderr")


def _joint_cfg(args) -> JointDiagConfig:
    return JointDiagConfig(
        rotation_tol=args.rotation_tol,
        off_tol=args.off_tol,
        max_sweeps=args.max_sweeps,
        canonicalize=not args.no_canonicalize,
        unit_frobenius=args.unit_frobenius,
        verbose=args.verbose,
    )


def _add_load_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, help="dataset manifest (TSV)")
    p.add_argument("--asymmetry-tol", type=float, default=1e-8, help="warn when input asymmetry exceeds this")
    p.add_argument("--normalize", action="store_true", help="rescale each matrix to unit Frobenius norm at load")
    if not any(a.dest == "seed" for a in p._actions):
        p.add_argument("--seed", type=int, default=0,
                       help="random seed (accepted by every subcommand; ignored by deterministic ones)")


def _flush_warnings(wlist) -> None:
    for w in wlist:
        print(f"warning: {w.message}", file=sys.stderr)


def _cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    gap = args.gap if args.gap is not None else 5.0 * args.spread
    mean0, mean1 = synth.separable_class_means(args.dim, args.informative, gap, rng)
    spec = synth.SynthSpec(
        dim=args.dim,
        class_counts=(args.n0, args.n1),
        class_means=(mean0, mean1),
        spread=args.spread,
        sigma=args.sigma,
        seed=int(rng.integers(2**31)),
    )
    dataset, truth = synth.generate(spec)
    manifest = data_io.write_dataset(dataset, args.out, {0: "class0", 1: "class1"})
    data_io.atomic_write_text(
        Path(args.out) / "truth.json",
        json.dumps(
            {"basis": truth.basis.tolist(), "diagonals": truth.diagonals.tolist()}
        )
        + "\n",
    )
    print(f"wrote {dataset.count} samples (dim {dataset.dim}) to {manifest}")
    print("task: class1-vs-class0")
    return 0


def _cmd_diagonalize(args) -> int:
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        matrix_set, records = data_io.load_matrix_set(
            args.manifest, asymmetry_tol=args.asymmetry_tol, normalize=args.normalize
        )
    _flush_warnings(wlist)
    result = run(matrix_set, _joint_cfg(args))
    payload = {
        "count": matrix_set.count,
        "dim": matrix_set.dim,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "sweeps_used": result.sweeps_used,
        "final_off_ratio": result.final_off_ratio,
        "off_history": result.off_history.tolist(),
        "sample_ids": [rec.sample_id for rec in records],
        "basis": result.basis.tolist(),
        "diagonals": result.diagonals.tolist(),
    }
    data_io.atomic_write_text(args.out, json.dumps(payload, indent=2) + "\n")
    print(
        f"diagonalized {matrix_set.count} matrices: converged={result.converged} "
        f"off_ratio={result.final_off_ratio:.3e} sweeps={result.sweeps_used} -> {args.out}"
    )
    return 0


def _cmd_features(args) -> int:
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        dataset = data_io.load_dataset(
            args.manifest, args.task, asymmetry_tol=args.asymmetry_tol, normalize=args.normalize
        )
    _flush_warnings(wlist)
    if args.method == "eigen":
        values = eigen_features(dataset.matrices).values
    else:
        fm, result = joint_features(dataset.matrices, _joint_cfg(args))
        values = fm.values
        if not result.converged:
            print(
                f"warning: joint diagonalization stalled at off_ratio="
                f"{result.final_off_ratio:.3e}",
                file=sys.stderr,
            )
    data_io.write_features_csv(args.out, dataset, values)
    print(f"wrote {values.shape[0]} x {values.shape[1]} features to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = data_io.ExperimentConfig(
        manifest_path=args.manifest,
        task=args.task,
        feature_method=args.method,
        model_kind=args.model,
        cv=CVConfig(
            folds=args.folds,
            repeats=args.repeats,
            grouped=args.grouped,
            transductive=args.transductive,
            seed=args.seed,
            tune=not args.no_tune,
        ),
        joint=_joint_cfg(args),
        asymmetry_tol=args.asymmetry_tol,
        normalize=args.normalize,
        out_json=args.out_json,
        out_csv=args.out_csv,
    )
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        report = data_io.run_experiment(cfg)
    _flush_warnings(wlist)
    print(
        f"task={report.task} features={report.feature_method} model={report.model_kind} "
        f"mean_auc={report.mean_auc:.4f} std_auc={report.std_auc:.4f} "
        f"({len(report.per_repeat_auc)} repeats)"
    )
    return 0


def _cmd_inspect(args) -> int:
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        if args.task:
            dataset = data_io.load_dataset(
                args.manifest, args.task, asymmetry_tol=args.asymmetry_tol, normalize=args.normalize
            )
            matrix_set = dataset.matrices
        else:
            dataset = None
            matrix_set, _ = data_io.load_matrix_set(
                args.manifest, asymmetry_tol=args.asymmetry_tol, normalize=args.normalize
            )
    _flush_warnings(wlist)
    print(f"matrices: {matrix_set.count}  dim: {matrix_set.dim}")
    if dataset is not None:
        ones = int(np.sum(dataset.labels == 1))
        print(f"labels: {ones} positive / {dataset.count - ones} negative")
        print(f"subjects: {len(set(dataset.subject_ids))}")
    if matrix_set.count >= 2:
        print(f"commutation_residual: {commutation_residual(matrix_set):.6e}")
    spectra = np.linalg.eigvalsh(matrix_set.matrices)
    print(
        f"eigenvalues: min={spectra.min():.6g} max={spectra.max():.6g} "
        f"mean_spectral_radius={np.abs(spectra).max(axis=1).mean():.6g}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="condiag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a ground-truth dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--n0", type=int, default=50, help="class-0 sample count")
    p.add_argument("--n1", type=int, default=50, help="class-1 sample count")
    p.add_argument("--spread", type=float, default=0.5, help="uniform half-width around class means")
    p.add_argument("--sigma", type=float, default=0.0, help="relative symmetric noise level")
    p.add_argument("--informative", type=int, default=3, help="coordinates carrying class signal")
    p.add_argument("--gap", type=float, default=None, help="class separation (default 5 x spread)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("diagonalize", help="emit joint basis, diagonals, and objective trace")
    _add_load_args(p)
    p.add_argument("--out", required=True, help="output JSON path")
    _add_joint_args(p)
    p.set_defaults(func=_cmd_diagonalize)

    p = sub.add_parser("features", help="export a feature CSV for a task")
    _add_load_args(p)
    p.add_argument("--task", required=True, help="binary task, e.g. AD-vs-NC or class1-vs-class0")
    p.add_argument("--method", choices=("joint_diag", "eigen"), default="joint_diag")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_joint_args(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("evaluate", help="run a cross-validated experiment")
    _add_load_args(p)
    p.add_argument("--task", required=True)
    p.add_argument("--method", choices=("joint_diag", "eigen"), default="joint_diag")
    p.add_argument("--model", choices=("logreg", "sgd"), default="logreg")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--grouped", action=argparse.BooleanOptionalAction, default=True,
                   help="keep all scans of one subject in a single fold")
    p.add_argument("--transductive", action="store_true",
                   help="fit the joint basis once on the full dataset instead of per training fold")
    p.add_argument("--no-tune", action="store_true", help="skip inner-CV hyperparameter tuning")
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    _add_joint_args(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("inspect", help="commutation residual and spectral summary")
    _add_load_args(p)
    p.add_argument("--task", default=None, help="optional binary task filter")
    p.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(f"error:usage: {e}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except CondiagError as e:
        print(f"error:{e.category}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error:io: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # keep the single-line contract even for bugs
        print(f"error:internal: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
