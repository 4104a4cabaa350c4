"""Query classification: sparse-code the projected query over the learned
dictionary, then score each class by reconstruction residual plus distance
to the class's mean code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coder import lasso_vector
from .data import LabeledDataset
from .errors import DimensionError, ParameterError
from .trainer import TrainedModel


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # rows true label, columns predicted label
    predictions: np.ndarray
    residuals: np.ndarray  # one row per sample, one column per class


def encode(model: TrainedModel, x, xi=None) -> np.ndarray:
    """Code a query against the whole dictionary:
    min_a ||P^T x - D a||_2^2 + xi ||a||_1."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.P.shape[0]:
        raise DimensionError(f"query length {x.shape[0]} != feature dim {model.P.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("query has non-finite entries")
    xi = model.hp.xi if xi is None else xi
    if xi < 0:
        raise ParameterError("xi must be >= 0")
    return lasso_vector(model.D.atoms, model.P.T @ (x / model.scale), xi)


def class_residual(model: TrainedModel, x, a, class_i: int, omega=None) -> float:
    """||P^T x - D_i a_i||_2^2 + omega ||a - m_i||_2^2 for class i (0-based)."""
    omega = model.hp.omega if omega is None else omega
    y = model.P.T @ (np.asarray(x, dtype=np.float64).ravel() / model.scale)
    start, stop = model.D.atom_ranges[class_i]
    recon = y - model.D.sub(class_i) @ a[start:stop]
    deviation = a - model.mean_codes[:, class_i]
    return float(recon @ recon) + omega * float(deviation @ deviation)


def predict(model: TrainedModel, x) -> int:
    """Label (1-based) of the class with the smallest residual; ties go to the
    lowest index."""
    a = encode(model, x)
    residuals = [class_residual(model, x, a, i) for i in range(model.n_classes)]
    return int(np.argmin(residuals)) + 1


def evaluate(model: TrainedModel, test: LabeledDataset) -> EvalResult:
    """Classify every test column; returns accuracy, confusion counts, and the
    per-sample class residuals."""
    if test.n_samples == 0:
        raise ParameterError("test set is empty")
    if test.dim != model.P.shape[0]:
        raise DimensionError(
            f"test feature dim {test.dim} != model feature dim {model.P.shape[0]}"
        )
    k = model.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    predictions = np.empty(test.n_samples, dtype=np.int64)
    residuals = np.empty((test.n_samples, k))
    for col in range(test.n_samples):
        x = test.samples[:, col]
        a = encode(model, x)
        res = np.array([class_residual(model, x, a, i) for i in range(k)])
        pred = int(np.argmin(res)) + 1
        predictions[col] = pred
        residuals[col] = res
        true = int(test.labels[col])
        if true <= k:
            confusion[true - 1, pred - 1] += 1
    accuracy = float(np.mean(predictions == test.labels))
    return EvalResult(accuracy=accuracy, confusion=confusion, predictions=predictions, residuals=residuals)
