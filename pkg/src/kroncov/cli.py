"""Command-line surface: decomposition, estimation, simulation, and QDA.

Matrices travel as headerless CSV (row i on line i), scalar results as
JSON sidecars.  Exit codes: 0 on success, 2 for input problems, 3 for
numerical failures.  All numeric output uses 17 significant digits, so a
fixed seed and flag set reproduce output files byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys

import numpy as np

from .kcd import FactorSingular, KCDOptions, SqrtKind, kcd
from .linalg import Covariance, Dims, DomainError, NotPositiveDefinite
from .qda import (
    ClassModel,
    EstimatorKind,
    LabeledDataset,
    confusion,
    classify,
    fit_class_models,
    load_dataset,
)
from .shrink import cse
from .sim import SimConfig, run_study, write_records

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

_LABEL_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


def _read_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _write_matrix(path: str, mat: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(mat), delimiter=",", fmt="%.17g")


def _json_value(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    return x


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_value)
        fh.write("\n")


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _add_dims_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p1", type=int, required=True, help="row dimension of the data matrices")
    parser.add_argument("--p2", type=int, required=True, help="column dimension of the data matrices")


def _add_kcd_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=1e-10, help="relative convergence threshold")
    parser.add_argument("--max-iter", type=int, default=1000, help="iteration cap for the factor fit")
    parser.add_argument(
        "--sqrt",
        choices=[k.value for k in SqrtKind],
        default=SqrtKind.SYMMETRIC.value,
        help="separable square-root family",
    )


def _opts_from(args: argparse.Namespace) -> KCDOptions:
    return KCDOptions(tol=args.tol, max_iter=args.max_iter, sqrt_kind=SqrtKind(args.sqrt))


def _load_covariance(path: str, dims: Dims) -> Covariance:
    mat = _read_matrix(path)
    if mat.shape != (dims.p, dims.p):
        raise ValueError(
            f"input matrix is {mat.shape[0]}x{mat.shape[1]}, expected "
            f"{dims.p}x{dims.p} for p1={dims.p1}, p2={dims.p2}"
        )
    return Covariance(mat)


def _cmd_kcd(args: argparse.Namespace) -> int:
    dims = Dims(args.p1, args.p2)
    sigma = _load_covariance(args.input, dims)
    result = kcd(sigma, dims, _opts_from(args))
    os.makedirs(args.out, exist_ok=True)
    _write_matrix(os.path.join(args.out, "K.csv"), result.k_factor.matrix)
    _write_matrix(os.path.join(args.out, "C.csv"), result.core.mat)
    _write_matrix(os.path.join(args.out, "H.csv"), result.h)
    _write_json(
        os.path.join(args.out, "summary.json"),
        {
            "iterations": result.iterations,
            "converged": result.converged,
            "divergence_value": result.divergence_value,
            "trace_c": float(np.trace(result.core.mat)),
        },
    )
    return EXIT_OK


def _cmd_cse(args: argparse.Namespace) -> int:
    dims = Dims(args.p1, args.p2)
    samples = _read_matrix(args.input)
    if samples.shape[1] != dims.p:
        raise ValueError(
            f"sample rows have length {samples.shape[1]}, expected p1*p2 = {dims.p}"
        )
    n = samples.shape[0]
    s = Covariance(samples.T @ samples / n)
    estimate, fit, _ = cse(s, n, dims, _opts_from(args))
    os.makedirs(args.out, exist_ok=True)
    _write_matrix(os.path.join(args.out, "sigma_hat.csv"), estimate.mat)
    _write_json(
        os.path.join(args.out, "summary.json"),
        {
            "n": n,
            "p1": dims.p1,
            "p2": dims.p2,
            "w_hat": fit.w_hat,
            "nu_hat": fit.nu_hat,
            "converged": True,
        },
    )
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    dims = Dims(args.p1, args.p2)
    p = dims.p
    nu_list = tuple(_float_list(args.nu)) if args.nu else (p + 2.0, 2.0 * p, 3.0 * p + 1.0, math.inf)
    n_list = tuple(_int_list(args.n)) if args.n else (dims.p2, (p + 1) // 2, p, (3 * p) // 2)
    config = SimConfig(
        dims=dims,
        nu_list=nu_list,
        n_list=n_list,
        reps=args.reps,
        seed=args.seed,
    )
    records = run_study(config, _opts_from(args))
    write_records(records, args.out)
    return EXIT_OK


def _cmd_qda_train(args: argparse.Namespace) -> int:
    dims = Dims(args.p1, args.p2)
    data = load_dataset(args.train, dims)
    for label in data.classes:
        if not _LABEL_RE.match(label):
            raise ValueError(f"class label {label!r} is not filesystem-safe")
    models = fit_class_models(data, EstimatorKind(args.estimator), _opts_from(args))
    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "p1": dims.p1,
        "p2": dims.p2,
        "estimator": args.estimator,
        "classes": list(data.classes),
        "models": {
            m.label: {
                "n": int(len(data.groups[m.label])),
                "logdet": m.logdet,
                "w_hat": m.w_hat,
            }
            for m in models
        },
    }
    for m in models:
        _write_matrix(os.path.join(args.out, f"mean_{m.label}.csv"), m.mean)
        _write_matrix(os.path.join(args.out, f"cov_{m.label}.csv"), m.cov.mat)
    _write_json(os.path.join(args.out, "manifest.json"), manifest)
    return EXIT_OK


def _load_models(model_dir: str) -> tuple[list[ClassModel], Dims]:
    with open(os.path.join(model_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    dims = Dims(manifest["p1"], manifest["p2"])
    estimator = EstimatorKind(manifest["estimator"])
    models = []
    for label in manifest["classes"]:
        mean = _read_matrix(os.path.join(model_dir, f"mean_{label}.csv")).ravel()
        cov = Covariance(_read_matrix(os.path.join(model_dir, f"cov_{label}.csv")))
        if mean.shape[0] != dims.p or cov.dim != dims.p:
            raise ValueError(f"model for class {label!r} does not match p1*p2 = {dims.p}")
        entry = manifest["models"][label]
        models.append(
            ClassModel(label, mean, cov, float(entry["logdet"]), estimator, entry["w_hat"])
        )
    return models, dims


def _cmd_qda_predict(args: argparse.Namespace) -> int:
    models, dims = _load_models(args.model)
    test = load_dataset(args.test, dims)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "predictions.csv"), "w", newline="") as fh:
        fh.write("label,predicted\n")
        for label in test.classes:
            for predicted in classify(models, test.groups[label]):
                fh.write(f"{label},{predicted}\n")
    counts, accuracy = confusion(models, test)
    overall = float(np.trace(counts) / counts.sum())
    _write_json(
        os.path.join(args.out, "metrics.json"),
        {
            "classes": [m.label for m in models],
            "confusion": counts.tolist(),
            "accuracy": accuracy,
            "overall_accuracy": overall,
        },
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kroncov",
        description="Kronecker-core decomposition and core-shrinkage covariance estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_kcd = sub.add_parser("kcd", help="decompose a covariance matrix into K, C, H")
    _add_dims_flags(p_kcd)
    _add_kcd_flags(p_kcd)
    p_kcd.add_argument("--out", required=True, help="output directory")
    p_kcd.add_argument("input", help="p x p covariance matrix CSV (no header)")
    p_kcd.set_defaults(func=_cmd_kcd)

    p_cse = sub.add_parser("cse", help="core shrinkage estimate from sample rows")
    _add_dims_flags(p_cse)
    _add_kcd_flags(p_cse)
    p_cse.add_argument("--out", required=True, help="output directory")
    p_cse.add_argument("input", help="n x p matrix CSV of vectorized samples (no header)")
    p_cse.set_defaults(func=_cmd_cse)

    p_sim = sub.add_parser("simulate", help="Monte Carlo estimator comparison")
    _add_dims_flags(p_sim)
    _add_kcd_flags(p_sim)
    p_sim.add_argument("--nu", help="comma-separated prior df values; 'inf' for the separable scenario")
    p_sim.add_argument("--n", help="comma-separated sample sizes")
    p_sim.add_argument("--reps", type=int, default=50, help="replicates per scenario")
    p_sim.add_argument("--seed", type=int, default=0, help="base seed for all streams")
    p_sim.add_argument("--out", required=True, help="records CSV path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_train = sub.add_parser("qda-train", help="fit per-class QDA models")
    _add_dims_flags(p_train)
    _add_kcd_flags(p_train)
    p_train.add_argument(
        "--estimator",
        choices=[k.value for k in EstimatorKind],
        default=EstimatorKind.CSE.value,
        help="per-class covariance estimator",
    )
    p_train.add_argument("--train", required=True, help="training CSV (label,v1,...,vp)")
    p_train.add_argument("--out", required=True, help="model directory")
    p_train.set_defaults(func=_cmd_qda_train)

    p_pred = sub.add_parser("qda-predict", help="classify labeled test data")
    p_pred.add_argument("--model", required=True, help="model directory from qda-train")
    p_pred.add_argument("--test", required=True, help="test CSV (label,v1,...,vp)")
    p_pred.add_argument("--out", required=True, help="output directory")
    p_pred.set_defaults(func=_cmd_qda_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotPositiveDefinite, FactorSingular, DomainError, np.linalg.LinAlgError) as exc:
        print(f"kroncov: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"kroncov: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
