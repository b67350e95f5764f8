"""Exhaustive grid search scored by mean stratified k-fold accuracy."""

from __future__ import annotations

import csv
import itertools
import warnings
from collections import defaultdict

import numpy as np

from ..errors import ConfigError, NonConvergenceWarning
from .forest import CRITERIA, forest_prefix_proba, grow_trees
from .trained import LINEAR_SVM, LOGISTIC, RANDOM_FOREST, fit_model
from .split import stratified_kfold


def default_grid(kind: str) -> list[dict]:
    if kind == RANDOM_FOREST:
        return [
            {"criterion": c, "max_depth": d, "n_estimators": n}
            for c, d, n in itertools.product(CRITERIA, (3, 5, 7, 9), range(5, 26))
        ]
    if kind == LOGISTIC:
        return [{"l2_strength": v} for v in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
    if kind == LINEAR_SVM:
        return [{"c": v} for v in (0.01, 0.1, 1.0, 10.0)]
    raise ConfigError(f"unknown model kind {kind!r}")


def _accuracy(y, p) -> float:
    return float(np.mean((p > 0.5) == (y == 1)))


def _rf_fold_scores(X, y, folds, grid, seed):
    """Accuracy per (grid point, fold), growing each forest once per criterion and fold."""
    by_crit = defaultdict(list)
    for i, g in enumerate(grid):
        by_crit[g["criterion"]].append(i)
    scores = np.zeros((len(grid), len(folds)))
    for crit, members in by_crit.items():
        depth = max(grid[i]["max_depth"] for i in members)
        n_trees = max(grid[i]["n_estimators"] for i in members)
        wanted = defaultdict(list)  # (depth, n_estimators) -> grid indices
        for i in members:
            wanted[(grid[i]["max_depth"], grid[i]["n_estimators"])].append(i)
        depths = sorted({d for d, _ in wanted})
        for f, (tr, te) in enumerate(folds):
            trees = grow_trees(X[tr], y[tr], crit, depth, n_trees, seed)
            for d in depths:
                for k, p in forest_prefix_proba(trees, X[te], d):
                    for i in wanted.get((d, k), ()):
                        scores[i, f] = _accuracy(y[te], p)
    return scores


def _generic_fold_scores(kind, X, y, folds, grid, seed, scale):
    scores = np.zeros((len(grid), len(folds)))
    names = [f"x{j}" for j in range(X.shape[1])]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        for i, g in enumerate(grid):
            for f, (tr, te) in enumerate(folds):
                m = fit_model(kind, X[tr], y[tr], names, g, seed=seed, scale=scale)
                scores[i, f] = _accuracy(y[te], m.proba(X[te]))
    return scores


def _preference_key(i: int, g: dict):
    return (g.get("n_estimators", 0), g.get("max_depth", 0), i)


def grid_search_cv(X, y, kind: str, grid=None, k: int = 5, seed: int = 0, scale: bool = False):
    """Score every grid point by mean k-fold accuracy and pick the best.

    Ties go to fewer estimators, then shallower trees, then grid order.
    Returns ``(best_params, table)`` where ``table`` has one dict per grid
    point with its fold scores and mean.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    grid = default_grid(kind) if grid is None else [dict(g) for g in grid]
    if not grid:
        raise ConfigError("grid must not be empty")
    folds = stratified_kfold(y, k, seed)
    if kind == RANDOM_FOREST:
        scores = _rf_fold_scores(X, y, folds, grid, seed)
    else:
        scores = _generic_fold_scores(kind, X, y, folds, grid, seed, scale)
    means = [float(sum(row) / len(row)) for row in scores.tolist()]
    best_score = max(means)
    best = min((i for i, m in enumerate(means) if m == best_score),
               key=lambda i: _preference_key(i, grid[i]))
    table = [
        {**g, "fold_scores": scores[i].tolist(), "mean_score": means[i]}
        for i, g in enumerate(grid)
    ]
    return dict(grid[best]), table


def write_grid_report(table, path) -> None:
    if not table:
        return
    params = [k for k in table[0] if k not in ("fold_scores", "mean_score")]
    n_folds = len(table[0]["fold_scores"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(params + [f"fold_{i + 1}" for i in range(n_folds)] + ["mean_score"])
        for row in table:
            w.writerow([row[p] for p in params] + [repr(v) for v in row["fold_scores"]]
                       + [repr(row["mean_score"])])
