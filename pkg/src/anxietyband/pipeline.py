"""End-to-end training: preprocess, window, label, split, select, tune, fit, evaluate."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantSignalWarning, DegenerateGroup, EmptySelectionWarning
from .features import AnalysisCrop, FeatureMatrix, build_feature_matrix
from .labeling import group_separation, labels_by_subject, score_cohort
from .models import (
    RANDOM_FOREST,
    Metrics,
    TrainedModel,
    evaluate,
    fit_model,
    grid_search_cv,
    split_dataset,
)
from .models.metrics import evaluate_predictions
from .signalproc import preprocess
from .stats import select_features

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    signal: str = "EDA"
    with_context: bool = False
    seed: int = 0
    proportions: tuple = (0.5, 0.1, 0.4)
    model: str = RANDOM_FOREST  # or "auto" to pick the best kind on validation
    grid: list | None = None
    folds: int = 5
    threshold: float = 0.5
    alpha: float = 0.05
    by_subject: bool = False
    scale_linear: bool = False
    crop: AnalysisCrop = field(default_factory=AnalysisCrop)


@dataclass
class TrainResult:
    model: TrainedModel
    matrix: FeatureMatrix
    split: object
    selection: list
    grid_table: list
    validation_scores: dict
    metrics: Metrics
    test_proba: np.ndarray


def label_cohort(stai_responses):
    scores = score_cohort(stai_responses)
    return scores, labels_by_subject(scores)


def stai_summary(scores) -> dict:
    """Per-timestamp raw-score mean/SD and anxious vs not-anxious z statistics."""
    out = {}
    for ts in ("T1", "T2", "T3"):
        raw = np.array([s.raw for s in scores if s.timestamp == ts], dtype=float)
        if raw.size:
            out[ts] = {"mean": float(raw.mean()), "sd": float(raw.std(ddof=1)) if raw.size > 1 else 0.0}
    za = [s.z for s in scores if s.label.value == "A"]
    zn = [s.z for s in scores if s.label.value == "NA"]
    for name, z in (("A", za), ("NA", zn)):
        out[name] = {"n": len(z), "z_mean": float(np.mean(z)) if z else 0.0,
                     "z_sd": float(np.std(z, ddof=1)) if len(z) > 1 else 0.0}
    try:
        out["p_value"] = group_separation(za, zn)
    except DegenerateGroup:
        out["p_value"] = None
    return out


def feature_matrix(sessions, labels, kind: str, with_context: bool,
                   crop: AnalysisCrop = AnalysisCrop()) -> FeatureMatrix:
    with warnings.catch_warnings():
        warnings.simplefilter("always", ConstantSignalWarning)
        signals = [preprocess(s.signal(kind)) for s in sessions]
    return build_feature_matrix(signals, labels, with_context, crop)


def train_on_matrix(matrix: FeatureMatrix, cfg: TrainConfig) -> TrainResult:
    y = matrix.y
    split = split_dataset(y, cfg.seed, cfg.proportions,
                          groups=matrix.subject_id if cfg.by_subject else None)
    train, val, test = (matrix.take(ix) for ix in (split.train, split.validation, split.test))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptySelectionWarning)
        selected, report = select_features(train, alpha=cfg.alpha)
    if not selected:
        log.warning("no significant feature; keeping all %d columns", len(matrix.column_names))
        selected = list(matrix.column_names)
    Xtr = train.select(selected).X

    kinds = ("random_forest", "logistic", "linear_svm") if cfg.model == "auto" else (cfg.model,)
    candidates = {}
    for kind in kinds:
        grid = cfg.grid if (cfg.grid is not None and len(kinds) == 1) else None
        best, table = grid_search_cv(Xtr, train.y, kind, grid, cfg.folds, cfg.seed, cfg.scale_linear)
        model = fit_model(kind, Xtr, train.y, selected, best, cfg.seed, cfg.scale_linear)
        val_acc = (evaluate_predictions(val.y, model.proba(val), cfg.threshold).accuracy
                   if len(val) else float("nan"))
        candidates[kind] = (model, table, best, val_acc)
        log.info("%s best %s, validation accuracy %.4f", kind, best, val_acc)
    # first kind wins validation ties
    chosen = max(kinds, key=lambda k: (candidates[k][3], -kinds.index(k)))
    model, table, best, _ = candidates[chosen]

    p_test = model.proba(test)
    metrics = evaluate(model, test, cfg.threshold)
    model.metadata.update({
        "signal": cfg.signal,
        "with_context": cfg.with_context,
        "split_sizes": [len(split.train), len(split.validation), len(split.test)],
        "cv_best": best,
        "cv_best_score": max(r["mean_score"] for r in table),
        "validation_scores": {k: v[3] for k, v in candidates.items()},
        "config_hash": matrix.provenance.get("config_hash", ""),
    })
    return TrainResult(model, matrix, split, report, table,
                       {k: v[3] for k, v in candidates.items()}, metrics, p_test)


def train_pipeline(sessions, stai_responses, cfg: TrainConfig) -> TrainResult:
    _, labels = label_cohort(stai_responses)
    matrix = feature_matrix(sessions, labels, cfg.signal, cfg.with_context, cfg.crop)
    return train_on_matrix(matrix, cfg)
