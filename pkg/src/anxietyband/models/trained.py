"""Model container, thresholded predictions, and save/load."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, CorruptModel, ManifestMismatch
from ..labeling import AnxietyLabel
from . import serialize
from .forest import RandomForest, RfHyperparams, Tree, forest_proba, train_random_forest
from .linear import LinearModel, train_linear_svm, train_logistic
from .metrics import Metrics, evaluate_predictions

RANDOM_FOREST = "random_forest"
LOGISTIC = "logistic"
LINEAR_SVM = "linear_svm"
MODEL_KINDS = (RANDOM_FOREST, LOGISTIC, LINEAR_SVM)


@dataclass(frozen=True)
class Prediction:
    p_anxious: float
    p_not_anxious: float
    label: AnxietyLabel


@dataclass
class TrainedModel:
    kind: str
    feature_names: tuple[str, ...]
    estimator: RandomForest | LinearModel
    hyperparams: dict
    metadata: dict = field(default_factory=dict)
    scaler: tuple[np.ndarray, np.ndarray] | None = None
    format_version: int = serialize.FORMAT_VERSION

    @property
    def uses_context(self) -> bool:
        return "context" in self.feature_names

    def align(self, X, columns=None) -> np.ndarray:
        """Reorder ``X`` into manifest order, refusing anything that does not fit."""
        if hasattr(X, "column_names"):
            X, columns = X.X, X.column_names
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if columns is None:
            if X.shape[1] != len(self.feature_names):
                raise ManifestMismatch(
                    f"model expects {len(self.feature_names)} features, got {X.shape[1]}"
                )
            return X
        columns = list(columns)
        missing = [c for c in self.feature_names if c not in columns]
        if missing:
            raise ManifestMismatch(f"input lacks model features {missing}")
        return X[:, [columns.index(c) for c in self.feature_names]]

    def proba(self, X, columns=None) -> np.ndarray:
        """P(anxious) for each row."""
        X = self.align(X, columns)
        if self.scaler is not None:
            X = (X - self.scaler[0]) / self.scaler[1]
        return self.estimator.predict_proba(X)


def _fit_scaler(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return mu, sd


def fit_model(kind: str, X, y, feature_names, hyperparams: dict, seed: int = 0,
              scale: bool = False, metadata: dict | None = None) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    scaler = None
    if kind == RANDOM_FOREST:
        h = RfHyperparams(hyperparams["criterion"], int(hyperparams["max_depth"]),
                          int(hyperparams["n_estimators"]), seed)
        est = train_random_forest(X, y, h)
        hyperparams = {"criterion": h.criterion, "max_depth": h.max_depth,
                       "n_estimators": h.n_estimators}
    elif kind in (LOGISTIC, LINEAR_SVM):
        if scale:
            scaler = _fit_scaler(X)
            X = (X - scaler[0]) / scaler[1]
        if kind == LOGISTIC:
            est = train_logistic(X, y, float(hyperparams["l2_strength"]))
        else:
            est = train_linear_svm(X, y, float(hyperparams["c"]), seed=seed)
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    meta = {"seed": seed, "scaled": scaler is not None, **(metadata or {})}
    return TrainedModel(kind, tuple(feature_names), est, dict(hyperparams), meta, scaler)


def predict_proba(model: TrainedModel, row, threshold: float = 0.5, columns=None) -> Prediction:
    """Single-row prediction; ``row`` may be a mapping of feature name to value."""
    if isinstance(row, dict):
        columns = list(row)
        row = [row[c] for c in columns]
    p = float(model.proba(np.asarray(row, dtype=float)[None, :], columns)[0])
    return Prediction(p, 1.0 - p, label_for(p, threshold))


def label_for(p_anxious: float, threshold: float = 0.5) -> AnxietyLabel:
    return AnxietyLabel.A if p_anxious > threshold else AnxietyLabel.NA


def evaluate(model: TrainedModel, matrix, threshold: float = 0.5) -> Metrics:
    return evaluate_predictions(matrix.y, model.proba(matrix), threshold)


# -- persistence -------------------------------------------------------------

def to_bytes(model: TrainedModel) -> bytes:
    header = {
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "hyperparams": model.hyperparams,
        "metadata": model.metadata,
    }
    arrays: dict[str, np.ndarray] = {}
    est = model.estimator
    if model.kind == RANDOM_FOREST:
        trees = est.trees
        header["n_features"] = est.n_features
        header["seed"] = est.hyperparams.seed
        arrays["tree_sizes"] = np.array([t.n_nodes for t in trees], dtype=np.int32)
        for name in ("feature", "threshold", "left", "right", "counts", "depth"):
            arrays[name] = np.concatenate([getattr(t, name) for t in trees])
    else:
        arrays["w"] = est.w
        arrays["bias_calib"] = np.array([est.b, est.calib_a, est.calib_c])
    if model.scaler is not None:
        arrays["scaler_mean"], arrays["scaler_scale"] = model.scaler
    return serialize.dumps(header, arrays)


def from_bytes(data: bytes) -> TrainedModel:
    header, arrays = serialize.loads(data)
    try:
        kind = header["kind"]
        names = tuple(header["feature_names"])
        hp = header["hyperparams"]
        if kind == RANDOM_FOREST:
            trees = []
            ends = np.cumsum(arrays["tree_sizes"])
            starts = ends - arrays["tree_sizes"]
            for s, e in zip(starts, ends):
                trees.append(Tree(*(arrays[k][s:e] for k in
                                    ("feature", "threshold", "left", "right", "counts", "depth"))))
            h = RfHyperparams(hp["criterion"], hp["max_depth"], hp["n_estimators"], header["seed"])
            est = RandomForest(trees, h, header["n_features"])
        elif kind in (LOGISTIC, LINEAR_SVM):
            b, a, c = arrays["bias_calib"]
            est = LinearModel(arrays["w"], float(b), float(a), float(c))
        else:
            raise CorruptModel(f"unknown model kind {kind!r}")
        scaler = None
        if "scaler_mean" in arrays:
            scaler = (arrays["scaler_mean"], arrays["scaler_scale"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptModel(f"incomplete model file: {exc}") from exc
    return TrainedModel(kind, names, est, hp, header["metadata"], scaler)


def save_model(model: TrainedModel, path) -> int:
    """Write the model; returns the file size in bytes."""
    data = to_bytes(model)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return len(data)


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
