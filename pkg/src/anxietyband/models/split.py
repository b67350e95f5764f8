"""Stratified 50/10/40 partitioning and stratified k-fold assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TooFewRows

DEFAULT_PROPORTIONS = (0.5, 0.1, 0.4)


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int
    stratified: bool = True
    by_subject: bool = False


def _stratified_order(y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Interleave classes so that any prefix holds each class near its overall share."""
    key = np.empty(len(y))
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        key[idx] = (np.arange(len(idx)) + 0.5) / len(idx)
    # equal keys across classes are ordered randomly
    tie = rng.permutation(len(y))
    return np.lexsort((tie, key))


def _cut_sizes(n: int, proportions) -> tuple[int, int]:
    p_train, p_val, p_test = proportions
    if abs(p_train + p_val + p_test - 1.0) > 1e-9 or min(proportions) < 0:
        raise ConfigError("split proportions must be non-negative and sum to 1")
    return int(np.floor(n * p_train)), int(np.floor(n * p_val))


def split_dataset(labels, seed: int, proportions=DEFAULT_PROPORTIONS, stratified: bool = True,
                  groups=None) -> DatasetSplit:
    """Seeded train/validation/test partition of row indices.

    With ``groups`` (subject ids) whole subjects go to one partition, and the
    proportions apply to subject counts.
    """
    y = np.asarray(labels)
    n = len(y)
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    rng = np.random.default_rng(seed)
    if groups is not None:
        groups = np.asarray(groups)
        uniq = np.unique(groups)
        g_order = uniq[rng.permutation(len(uniq))]
        n_tr, n_va = _cut_sizes(len(uniq), proportions)
        parts = (g_order[:n_tr], g_order[n_tr:n_tr + n_va], g_order[n_tr + n_va:])
        idx = [np.flatnonzero(np.isin(groups, p)) for p in parts]
        return DatasetSplit(*idx, seed=seed, stratified=False, by_subject=True)

    order = _stratified_order(y, rng) if stratified else rng.permutation(n)
    n_tr, n_va = _cut_sizes(n, proportions)
    return DatasetSplit(
        np.sort(order[:n_tr]), np.sort(order[n_tr:n_tr + n_va]), np.sort(order[n_tr + n_va:]),
        seed=seed, stratified=stratified,
    )


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """``k`` (train, held-out) index pairs with classes spread evenly over folds."""
    y = np.asarray(labels)
    if k < 2 or len(y) < k:
        raise TooFewRows(f"cannot make {k} folds from {len(y)} rows")
    rng = np.random.default_rng(seed)
    fold = np.empty(len(y), dtype=int)
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = (np.arange(len(idx)) + offset) % k
        offset += len(idx)
    return [(np.flatnonzero(fold != f), np.flatnonzero(fold == f)) for f in range(k)]
