"""Classifiers, data partitioning, tuning, metrics and model files."""

from .forest import RandomForest, RfHyperparams, entropy, gini, train_random_forest
from .linear import LinearModel, train_linear_svm, train_logistic
from .metrics import Confusion, Metrics, evaluate_predictions, metrics_from_confusion
from .search import default_grid, grid_search_cv, write_grid_report
from .split import DatasetSplit, split_dataset, stratified_kfold
from .trained import (
    LINEAR_SVM,
    LOGISTIC,
    MODEL_KINDS,
    RANDOM_FOREST,
    Prediction,
    TrainedModel,
    evaluate,
    fit_model,
    label_for,
    load_model,
    predict_proba,
    save_model,
)

__all__ = [
    "Confusion", "DatasetSplit", "LINEAR_SVM", "LOGISTIC", "LinearModel", "MODEL_KINDS",
    "Metrics", "Prediction", "RANDOM_FOREST", "RandomForest", "RfHyperparams", "TrainedModel",
    "default_grid", "entropy", "evaluate", "evaluate_predictions", "fit_model", "gini",
    "grid_search_cv", "label_for", "load_model", "metrics_from_confusion", "predict_proba",
    "save_model", "split_dataset", "stratified_kfold", "train_linear_svm", "train_logistic",
    "train_random_forest", "write_grid_report",
]
