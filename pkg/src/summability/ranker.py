"""Feature-based score predictors: ridge regression and a pairwise ranker.

Both models standardize features with training-set statistics and persist
them (plus the feature schema version) in a JSON model file. The pairwise
model scores ordered pairs through sigmoid(w . (x_i - x_j)); a Borda-style
aggregation turns pair probabilities back into per-document scores.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import PredictionTable
from .errors import DataFormatError, DegenerateInputError, SchemaMismatchError
from .features import FEATURE_SCHEMAS
from .stats import CorrelationReport, correlation_report

MODEL_FILE_VERSION = 1
DEFAULT_RIDGE = 1e-6


@dataclass(eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    schema_version: str
    kind: str = "regression"

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feature_means) / self.feature_stds

    def effective_coefficients(self) -> tuple[np.ndarray, float]:
        """Equivalent slope and intercept in raw (unstandardized) space."""
        slope = self.weights / self.feature_stds
        return slope, self.bias - float(slope @ self.feature_means)


@dataclass(eq=False)
class PairwiseModel(LinearModel):
    kind: str = "pairwise"


def _standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)  # constant columns pass through
    return means, stds


def _check_training_input(x: np.ndarray, y: np.ndarray) -> None:
    if x.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    if len(x) != len(y):
        raise ValueError("feature matrix and targets disagree on length")
    if len(x) < 2:
        raise DegenerateInputError("need at least 2 training documents")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("training data must be finite")


def train_regression(
    x: Sequence[Sequence[float]],
    y: Sequence[float],
    schema_version: str,
    ridge: float = DEFAULT_RIDGE,
) -> LinearModel:
    """Closed-form ridge least squares on standardized features."""
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    _check_training_input(ax, ay)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    means, stds = _standardization(ax)
    z = (ax - means) / stds
    bias = float(ay.mean())
    gram = z.T @ z + ridge * np.eye(z.shape[1])
    weights = np.linalg.solve(gram, z.T @ (ay - bias))
    return LinearModel(
        weights=weights,
        bias=bias,
        feature_means=means,
        feature_stds=stds,
        schema_version=schema_version,
    )


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def train_pairwise(
    x: Sequence[Sequence[float]],
    y: Sequence[float],
    schema_version: str,
    epochs: int = 5,
    learning_rate: float = 0.1,
    seed: int = 0,
    max_pairs: int | None = None,
) -> PairwiseModel:
    """Full-batch gradient descent on pair cross-entropy.

    Ordered pairs with tied targets (and self pairs) are excluded. The model
    is antisymmetric by construction, so the two directions of a pair carry
    the same gradient signal. ``max_pairs`` caps the pair set by seeded
    subsampling for large inputs.
    """
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    _check_training_input(ax, ay)
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    means, stds = _standardization(ax)
    z = (ax - means) / stds
    n = len(z)
    left, right = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    left, right = left.ravel(), right.ravel()
    keep = ay[left] != ay[right]
    left, right = left[keep], right[keep]
    if len(left) == 0:
        raise DegenerateInputError("all targets tied: no usable training pairs")
    if max_pairs is not None and len(left) > max_pairs:
        idx = np.random.default_rng(seed).choice(len(left), size=max_pairs, replace=False)
        left, right = left[idx], right[idx]
    diffs = z[left] - z[right]
    labels = (ay[left] > ay[right]).astype(float)
    weights = np.zeros(z.shape[1])
    for _ in range(epochs):
        probs = _sigmoid(diffs @ weights)
        grad = diffs.T @ (probs - labels) / len(diffs)
        weights = weights - learning_rate * grad
    return PairwiseModel(
        weights=weights,
        bias=0.0,
        feature_means=means,
        feature_stds=stds,
        schema_version=schema_version,
    )


def _check_matrix_against(model: LinearModel, x: np.ndarray) -> None:
    if x.ndim != 2 or x.shape[1] != len(model.weights):
        raise SchemaMismatchError(
            f"feature matrix has {x.shape[1] if x.ndim == 2 else '?'} columns; "
            f"model schema {model.schema_version!r} expects {len(model.weights)}"
        )


def predict(model: LinearModel, doc_ids: Sequence[str], x: Sequence[Sequence[float]]) -> PredictionTable:
    """Score documents with a regression model (higher = better expected score)."""
    ax = np.asarray(x, dtype=float)
    _check_matrix_against(model, ax)
    if len(doc_ids) != len(ax):
        raise ValueError("doc_ids and feature matrix disagree on length")
    scores = model.standardize(ax) @ model.weights + model.bias
    return PredictionTable({d: float(s) for d, s in zip(doc_ids, scores)})


def pair_probabilities(
    model: PairwiseModel, doc_ids: Sequence[str], x: Sequence[Sequence[float]]
) -> dict[tuple[str, str], float]:
    """P(doc i outranks doc j) for every ordered pair of distinct documents."""
    ax = np.asarray(x, dtype=float)
    _check_matrix_against(model, ax)
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("doc_ids must be unique")
    z = model.standardize(ax)
    raw = z @ model.weights
    probs: dict[tuple[str, str], float] = {}
    for i, di in enumerate(doc_ids):
        for j, dj in enumerate(doc_ids):
            if i != j:
                probs[(di, dj)] = float(_sigmoid(np.asarray([raw[i] - raw[j]]))[0])
    return probs


def aggregate_ranking(pair_probs: Mapping[tuple[str, str], float]) -> PredictionTable:
    """Borda aggregation: S(i) = sum over j of P(i outranks j).

    Requires a complete antisymmetric pair set; downstream consumers break
    score ties by doc_id.
    """
    ids = sorted({i for i, _ in pair_probs} | {j for _, j in pair_probs})
    if len(ids) < 2:
        raise ValueError("need at least 2 documents to aggregate")
    for i in ids:
        for j in ids:
            if i != j and (i, j) not in pair_probs:
                raise DataFormatError(f"missing pair probability for ({i!r}, {j!r})")
    for i in ids:
        for j in ids:
            if i >= j:
                continue
            gap = pair_probs[(i, j)] + pair_probs[(j, i)] - 1.0
            if abs(gap) > 1e-9:
                raise DataFormatError(
                    f"pair ({i!r}, {j!r}) violates antisymmetry by {gap:.3g}"
                )
    return PredictionTable(
        {i: sum(pair_probs[(i, j)] for j in ids if j != i) for i in ids}
    )


def score_documents(
    model: LinearModel, doc_ids: Sequence[str], x: Sequence[Sequence[float]]
) -> PredictionTable:
    """Per-document scores from either model kind.

    Regression models predict directly; a pairwise model contributes its
    latent linear score, which orders documents identically to a Borda
    aggregation over the same set.
    """
    if model.kind == "pairwise":
        ax = np.asarray(x, dtype=float)
        _check_matrix_against(model, ax)
        if len(doc_ids) != len(ax):
            raise ValueError("doc_ids and feature matrix disagree on length")
        raw = model.standardize(ax) @ model.weights
        return PredictionTable({d: float(s) for d, s in zip(doc_ids, raw)})
    return predict(model, doc_ids, x)


def evaluate_predictions(
    predictions: PredictionTable, gold: Mapping[str, float]
) -> CorrelationReport:
    """Correlation report between predictions and gold over shared documents."""
    shared = sorted(set(predictions.entries) & set(gold))
    if len(shared) < 3:
        raise DegenerateInputError("need at least 3 shared documents to evaluate")
    return correlation_report(
        [predictions[d] for d in shared], [gold[d] for d in shared]
    )


def train_val_split(
    doc_ids: Sequence[str], val_fraction: float = 0.2, seed: int = 0
) -> tuple[list[str], list[str]]:
    """Deterministic seeded shuffle split; validation gets floor(n * fraction)."""
    if not 0.0 <= val_fraction < 1.0:
        raise ValueError("val_fraction must lie in [0, 1)")
    ids = sorted(doc_ids)
    order = np.random.default_rng(seed).permutation(len(ids))
    n_val = math.floor(len(ids) * val_fraction)
    shuffled = [ids[i] for i in order]
    return shuffled[n_val:], shuffled[:n_val]


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def save_model(model: LinearModel, path: str | os.PathLike) -> None:
    payload = {
        "file_version": MODEL_FILE_VERSION,
        "kind": model.kind,
        "schema_version": model.schema_version,
        "weights": [float(w) for w in model.weights],
        "bias": float(model.bias),
        "feature_means": [float(m) for m in model.feature_means],
        "feature_stds": [float(s) for s in model.feature_stds],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"malformed model file: {exc}") from None
    for key in ("file_version", "kind", "schema_version", "weights", "bias",
                "feature_means", "feature_stds"):
        if key not in payload:
            raise DataFormatError(f"model file missing field {key!r}")
    if payload["file_version"] != MODEL_FILE_VERSION:
        raise SchemaMismatchError(
            f"model file version {payload['file_version']!r} not supported"
        )
    schema = payload["schema_version"]
    if schema not in FEATURE_SCHEMAS:
        raise SchemaMismatchError(f"unknown feature schema {schema!r}")
    width = len(FEATURE_SCHEMAS[schema])
    vectors = {
        key: np.asarray(payload[key], dtype=float)
        for key in ("weights", "feature_means", "feature_stds")
    }
    if any(len(v) != width for v in vectors.values()):
        raise SchemaMismatchError(
            f"model parameter width disagrees with schema {schema!r}"
        )
    if (vectors["feature_stds"] <= 0).any():
        raise DataFormatError("model feature_stds must be positive")
    cls = PairwiseModel if payload["kind"] == "pairwise" else LinearModel
    if payload["kind"] not in ("regression", "pairwise"):
        raise DataFormatError(f"unknown model kind {payload['kind']!r}")
    return cls(
        weights=vectors["weights"],
        bias=float(payload["bias"]),
        feature_means=vectors["feature_means"],
        feature_stds=vectors["feature_stds"],
        schema_version=schema,
    )
