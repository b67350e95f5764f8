"""Random forest of CART trees with gini / entropy splits and soft voting.

Randomness is keyed rather than streamed: tree ``t`` draws its bootstrap from
``(seed, t)`` and the node at heap position ``h`` draws its candidate
features from ``(seed, t, h)``.  A forest therefore never depends on how many
trees it has or how deep they may grow, so the first ``k`` trees of a
25-tree forest are exactly a ``k``-tree forest, and a depth-9 tree cut at
depth 7 is exactly the depth-7 tree.  Grid search relies on this.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, SingleClassWarning

CRITERIA = ("gini", "entropy")


@dataclass(frozen=True)
class RfHyperparams:
    criterion: str = "gini"
    max_depth: int = 7
    n_estimators: int = 13
    seed: int = 0

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}")
        if self.max_depth < 1 or self.n_estimators < 1:
            raise ConfigError("max_depth and n_estimators must be >= 1")


def gini(counts) -> float:
    c = np.asarray(counts, dtype=float)
    n = c.sum()
    return float(1.0 - ((c / n) ** 2).sum()) if n else 0.0


def entropy(counts) -> float:
    c = np.asarray(counts, dtype=float)
    n = c.sum()
    p = c[c > 0] / n
    return float(-(p * np.log2(p)).sum()) if n else 0.0


@dataclass
class Tree:
    feature: np.ndarray    # int32, -1 at leaves
    threshold: np.ndarray  # float64, go left when x <= threshold
    left: np.ndarray       # int32 child index, -1 at leaves
    right: np.ndarray
    counts: np.ndarray     # int32 (n_nodes, 2) bootstrap class counts
    depth: np.ndarray      # int16

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_proba(self, X: np.ndarray, max_depth: int | None = None) -> np.ndarray:
        """P(anxious) of the leaf reached by each row, optionally capping depth."""
        node = np.zeros(len(X), dtype=np.int64)
        internal = self.feature >= 0
        if max_depth is not None:
            internal = internal & (self.depth < max_depth)
        rows = np.arange(len(X))
        active = internal[node]
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = internal[node]
        c = self.counts[node]
        return c[:, 1] / c.sum(axis=1)


def _weighted_impurity(n1_left, n_left, n1_total, n_total, criterion):
    """Sum over both children of n_child * impurity(child), vectorized."""
    n0_left = n_left - n1_left
    n_right = n_total - n_left
    n1_right = n1_total - n1_left
    n0_right = n_right - n1_right
    if criterion == "gini":
        return (n_left - (n1_left**2 + n0_left**2) / n_left) + (
            n_right - (n1_right**2 + n0_right**2) / n_right
        )
    out = np.zeros(np.broadcast(n1_left, n_left).shape)
    for c, n in ((n1_left, n_left), (n0_left, n_left), (n1_right, n_right), (n0_right, n_right)):
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(c > 0, c * np.log2(np.where(c > 0, c, 1) / n), 0.0)
        out -= term
    return out


def _best_split(Xn: np.ndarray, yn: np.ndarray, criterion: str):
    """Best (column, threshold) over the candidate columns of ``Xn``."""
    m = len(yn)
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    n1_left = np.cumsum(ys, axis=0)[:-1].astype(float)
    n_left = np.arange(1, m, dtype=float)[:, None]
    score = _weighted_impurity(n1_left, n_left, float(yn.sum()), float(m), criterion)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    score = np.where(valid, score, np.inf)
    # column-major flat argmin: first candidate column wins ties, then the lowest threshold
    flat = int(np.argmin(score.T))
    col, pos = divmod(flat, m - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    thr = (lo + hi) / 2.0
    if thr >= hi:
        thr = lo
    return col, float(thr)


def grow_tree(X: np.ndarray, y: np.ndarray, sample: np.ndarray, criterion: str,
              max_depth: int, max_features: int, key: tuple[int, ...]) -> Tree:
    feature, threshold, left, right, counts, depth = [], [], [], [], [], []
    p = X.shape[1]
    stack = [(sample, 1, 0, -1, False)]  # (rows, heap id, depth, parent, is_left)
    while stack:
        rows, heap, d, parent, is_left = stack.pop()
        nid = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = nid
        yr = y[rows]
        c1 = int(yr.sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((len(rows) - c1, c1))
        depth.append(d)
        if d >= max_depth or c1 == 0 or c1 == len(rows):
            continue
        rng = np.random.default_rng([*key, heap])
        cand = rng.choice(p, size=max_features, replace=False)
        split = _best_split(X[np.ix_(rows, cand)], yr, criterion)
        if split is None:
            continue
        col, thr = split
        f = int(cand[col])
        feature[nid] = f
        threshold[nid] = thr
        go_left = X[rows, f] <= thr
        # right pushed first so the left subtree is numbered first
        stack.append((rows[~go_left], 2 * heap + 1, d + 1, nid, False))
        stack.append((rows[go_left], 2 * heap, d + 1, nid, True))
    return Tree(
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(counts, dtype=np.int32).reshape(-1, 2),
        np.array(depth, dtype=np.int16),
    )


def max_features_for(p: int) -> int:
    return max(1, min(p, math.ceil(math.sqrt(p))))


def bootstrap_sample(n: int, seed: int, tree_index: int) -> np.ndarray:
    return np.random.default_rng([seed, tree_index]).integers(0, n, size=n)


@dataclass
class RandomForest:
    trees: list
    hyperparams: RfHyperparams
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        return forest_proba(self.trees, np.asarray(X, dtype=float))


def forest_proba(trees, X: np.ndarray, max_depth: int | None = None) -> np.ndarray:
    # sequential sum so every prefix of the forest rounds identically
    acc = np.zeros(len(X))
    for t in trees:
        acc = acc + t.leaf_proba(X, max_depth)
    return acc / len(trees)


def forest_prefix_proba(trees, X: np.ndarray, max_depth: int | None = None):
    """Yield ``(k, p_anxious)`` for the forests made of the first k trees."""
    acc = np.zeros(len(X))
    for k, t in enumerate(trees, start=1):
        acc = acc + t.leaf_proba(X, max_depth)
        yield k, acc / k


def grow_trees(X, y, criterion: str, max_depth: int, n_estimators: int, seed: int) -> list:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    mf = max_features_for(X.shape[1])
    return [
        grow_tree(X, y, bootstrap_sample(len(y), seed, t), criterion, max_depth, mf, (seed, t))
        for t in range(n_estimators)
    ]


def train_random_forest(X, y, h: RfHyperparams) -> RandomForest:
    """Fit ``h.n_estimators`` bootstrap trees with ceil(sqrt(p)) candidate features per node."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ConfigError("cannot train on an empty set")
    if len(np.unique(y)) < 2:
        warnings.warn("training data holds a single class", SingleClassWarning)
    trees = grow_trees(X, y, h.criterion, h.max_depth, h.n_estimators, h.seed)
    return RandomForest(trees, h, X.shape[1])
