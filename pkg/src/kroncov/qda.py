"""Quadratic discriminant analysis over matrix-valued features.

Class covariances come from a pluggable estimator: the unstructured
sample covariance, the separable fit, or the core shrinkage estimator.
A new observation is assigned to the class minimizing the
Mahalanobis-plus-logdet score; equal class frequencies are assumed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

from .kcd import FactorSingular, KCDOptions, kcd
from .linalg import Covariance, Dims, NotPositiveDefinite, log_det
from .shrink import cse


class EstimatorKind(enum.Enum):
    MLE = "mle"
    KMLE = "kmle"
    CSE = "cse"


@dataclass(frozen=True)
class LabeledDataset:
    """Per-class feature vectors, each the column-major vec of a p1 x p2 matrix."""

    dims: Dims
    groups: dict[str, NDArray]

    def __post_init__(self):
        if not self.groups:
            raise ValueError("dataset has no classes")
        for label, x in self.groups.items():
            x = np.asarray(x, dtype=float)
            if x.ndim != 2 or x.shape[1] != self.dims.p:
                raise ValueError(
                    f"class {label!r}: expected (n, {self.dims.p}) rows, got {x.shape}"
                )
            if x.shape[0] < 1:
                raise ValueError(f"class {label!r} has no samples")
            self.groups[label] = x

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(self.groups))

    @property
    def size(self) -> int:
        return sum(len(x) for x in self.groups.values())


@dataclass(frozen=True)
class ClassModel:
    """Fitted mean and covariance of one class; w_hat is set for CSE only."""

    label: str
    mean: NDArray
    cov: Covariance
    logdet: float
    estimator: EstimatorKind
    w_hat: float | None = None


def fit_class_models(
    data: LabeledDataset,
    estimator: EstimatorKind,
    opts: KCDOptions | None = None,
) -> list[ClassModel]:
    """Per-class sample means and covariances under the chosen estimator.

    Covariances are computed from data centered at the class mean with
    divisor n_k.  Estimator failures carry the class id.
    """
    opts = opts or KCDOptions()
    models = []
    for label in data.classes:
        x = data.groups[label]
        mean = x.mean(axis=0)
        centered = x - mean
        w_hat = None
        try:
            s = Covariance(centered.T @ centered / len(x))
            if estimator is EstimatorKind.MLE:
                cov = s
            elif estimator is EstimatorKind.KMLE:
                cov = kcd(s, data.dims, opts).k_factor.to_covariance()
            else:
                cov, fit, _ = cse(s, len(x), data.dims, opts)
                w_hat = fit.w_hat
            logdet = log_det(cov)
        except (NotPositiveDefinite, FactorSingular) as exc:
            raise type(exc)(f"class {label!r}: {exc}") from exc
        models.append(ClassModel(label, mean, cov, logdet, estimator, w_hat))
    return models


def score(y: NDArray, model: ClassModel) -> float:
    """QDA score (y - mu)^T Sigma^{-1} (y - mu) + ln|Sigma|; lower is better."""
    r = np.asarray(y, dtype=float) - model.mean
    factor = cho_factor(model.cov.mat, lower=True)
    return float(r @ cho_solve(factor, r) + model.logdet)


def _score_matrix(models: list[ClassModel], x: NDArray) -> NDArray:
    """Scores for every (row of x, model) pair, shape (n, n_classes)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for model in models:
        r = x - model.mean
        factor = cho_factor(model.cov.mat, lower=True)
        cols.append(np.einsum("ij,ij->i", r, cho_solve(factor, r.T).T) + model.logdet)
    return np.column_stack(cols)


def classify(models: list[ClassModel], x: NDArray) -> list[str]:
    """Arg-min-score class label for each row of x."""
    picks = np.argmin(_score_matrix(models, np.atleast_2d(x)), axis=1)
    return [models[i].label for i in picks]


def confusion(
    models: list[ClassModel], test: LabeledDataset
) -> tuple[NDArray, dict[str, float]]:
    """Counts matrix (rows true, columns predicted) and per-class accuracy.

    Row/column order follows the models' label order; every test label
    must have a model.
    """
    labels = [m.label for m in models]
    index = {label: i for i, label in enumerate(labels)}
    for label in test.classes:
        if label not in index:
            raise ValueError(f"test label {label!r} has no fitted model")
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for label in test.classes:
        truth = index[label]
        for predicted in classify(models, test.groups[label]):
            counts[truth, index[predicted]] += 1
    accuracy = {
        label: counts[i, i] / counts[i].sum() if counts[i].sum() else 0.0
        for i, label in enumerate(labels)
    }
    return counts, accuracy


def load_dataset(path: str, dims: Dims) -> LabeledDataset:
    """Read `label,v1,...,vp` rows into per-class arrays."""
    groups: dict[str, list[list[float]]] = {}
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if len(header) != dims.p + 1 or header[0] != "label":
            raise ValueError(
                f"expected header label,v1,...,v{dims.p}, got {len(header)} columns"
            )
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != dims.p + 1:
                raise ValueError(f"line {lineno}: expected {dims.p + 1} fields, got {len(parts)}")
            groups.setdefault(parts[0], []).append([float(v) for v in parts[1:]])
    return LabeledDataset(dims, {label: np.asarray(rows) for label, rows in groups.items()})


def save_dataset(data: LabeledDataset, path: str) -> None:
    """Write the dataset in the `label,v1,...,vp` format, classes in sorted order."""
    with open(path, "w", newline="") as fh:
        fh.write("label," + ",".join(f"v{i + 1}" for i in range(data.dims.p)) + "\n")
        for label in data.classes:
            for row in data.groups[label]:
                fh.write(label + "," + ",".join(format(v, ".17g") for v in row) + "\n")
