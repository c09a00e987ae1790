"""Information-gain decision trees and bootstrap random forests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "DecisionTreeModel",
    "DecisionTree",
    "RandomForest",
    "entropy",
    "information_gain",
    "train_tree",
    "train_forest",
    "predict_forest",
    "tree_rng",
]

_TIE_TOL = 1e-12
_CHUNK_CELLS = 4_000_000


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def information_gain(parent, left, right) -> float:
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    n_l, n_r = left.sum(), right.sum()
    n = n_l + n_r
    return entropy(parent) - (n_l / n) * entropy(left) - (n_r / n) * entropy(right)


def _entropy_rows(counts, totals):
    # counts: (..., C); totals: (...,); zero totals give zero entropy
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[..., None]
        logs = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -(p * logs).sum(axis=-1)


@dataclass
class DecisionTreeModel:
    """Flat node arrays; leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        """Leaf index per row; ``x <= threshold`` goes left."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            feats = self.feature[node[active]]
            if sp.issparse(X):
                vals = np.asarray(X[active, feats]).ravel()
            else:
                vals = X[active, feats]
            go_left = vals <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_index(self, X) -> np.ndarray:
        return self.counts[self.apply(X)].argmax(axis=1)


def _block(X, rows, cols):
    sub = X[rows][:, cols]
    return sub.toarray() if sp.issparse(sub) else np.asarray(sub)


def _nonconstant_columns(X, rows):
    sub = X[rows]
    if sp.issparse(sub):
        sub = sub.tocsc()
        nnz = np.diff(sub.indptr)
        candidates = np.flatnonzero(nnz > 0)
        if candidates.size == 0:
            return candidates
        mins = np.asarray(sub[:, candidates].min(axis=0).toarray()).ravel()
        maxs = np.asarray(sub[:, candidates].max(axis=0).toarray()).ravel()
        return candidates[maxs > mins]
    return np.flatnonzero(sub.max(axis=0) > sub.min(axis=0))


def _best_split(X, rows, y_onehot, feats):
    """Max-gain (feature, threshold) over ``feats`` (ascending), or None."""
    n = len(rows)
    parent = y_onehot[rows].sum(axis=0)
    parent_h = entropy(parent)
    best = None  # (gain, feature, threshold)
    step = max(1, _CHUNK_CELLS // max(n, 1))
    Y = y_onehot[rows]
    positions = np.arange(1, n)
    for start in range(0, len(feats), step):
        cols = feats[start : start + step]
        V = _block(X, rows, cols)
        order = np.argsort(V, axis=0, kind="stable")
        Vs = np.take_along_axis(V, order, axis=0)
        left = np.cumsum(Y[order], axis=0)[:-1]  # (n-1, m, C)
        right = parent - left
        n_l = positions[:, None].astype(np.float64)
        n_r = n - n_l
        gain = parent_h - (n_l / n) * _entropy_rows(left, np.broadcast_to(n_l, left.shape[:2])) \
            - (n_r / n) * _entropy_rows(right, np.broadcast_to(n_r, right.shape[:2]))
        valid = Vs[1:] > Vs[:-1]
        gain = np.where(valid, gain, -np.inf)
        col_max = gain.max(axis=0)
        for j in range(len(cols)):
            if not np.isfinite(col_max[j]):
                continue
            if best is not None and col_max[j] <= best[0] + _TIE_TOL:
                continue
            i = int(np.flatnonzero(gain[:, j] >= col_max[j] - _TIE_TOL)[0])
            threshold = 0.5 * (Vs[i, j] + Vs[i + 1, j])
            best = (float(col_max[j]), int(cols[j]), float(threshold))
    return best


def _candidate_features(X, rows, n_features, features_per_split, rng):
    live = _nonconstant_columns(X, rows)
    if features_per_split is None or features_per_split >= n_features:
        return live
    perm = rng.permutation(n_features)
    chosen = perm[:features_per_split]
    picked = np.intersect1d(chosen, live)
    if picked.size == 0 and live.size:
        # keep drawing past the quota until one usable feature turns up
        is_live = np.zeros(n_features, dtype=bool)
        is_live[live] = True
        rest = perm[features_per_split:]
        hits = rest[is_live[rest]]
        picked = hits[:1]
    return np.sort(picked)


def train_tree(X, y_idx, n_classes, max_depth=None, min_samples_split=2,
               features_per_split=None, rng=None, rows=None) -> DecisionTreeModel:
    """Greedy top-down tree on class indices ``y_idx``.

    ``rows`` (possibly with repeats) selects the training sample; ties in
    gain go to the lowest feature column, then the lowest threshold.
    """
    n_total, n_features = X.shape
    if rows is None:
        rows = np.arange(n_total)
    y_onehot = np.zeros((n_total, n_classes))
    y_onehot[np.arange(n_total), y_idx] = 1.0
    rng = rng if rng is not None else np.random.default_rng(0)

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(node_rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(y_onehot[node_rows].sum(axis=0))
        return len(feature) - 1

    root = new_node(rows)
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        c = counts[node]
        if np.count_nonzero(c) <= 1:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if len(node_rows) < min_samples_split:
            continue
        feats = _candidate_features(X, node_rows, n_features, features_per_split, rng)
        if feats.size == 0:
            continue
        split = _best_split(X, node_rows, y_onehot, feats)
        if split is None:
            continue
        _, f, thr = split
        vals = _block(X, node_rows, [f]).ravel()
        mask = vals <= thr
        l_rows, r_rows = node_rows[mask], node_rows[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        # push right first so the left subtree is numbered first
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))

    return DecisionTreeModel(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.float64).reshape(-1, n_classes),
    )


def tree_rng(seed, tree_index):
    """Independent stream for one tree, derived from (seed, tree_index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tree_index)]))


def _check_fit_input(X, y):
    X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
    classes, y_idx = np.unique(y, return_inverse=True)
    return X, classes, y_idx


def _check_predict_input(est, X):
    check_is_fitted(est, "classes_")
    X = check_array(X, accept_sparse="csr", dtype=np.float64)
    if X.shape[1] != est.n_features_in_:
        raise ValueError(f"X has {X.shape[1]} features, expected {est.n_features_in_}")
    return X


class DecisionTree(ClassifierMixin, BaseEstimator):
    def __init__(self, max_depth=None, min_samples_split=2, features_per_split=None,
                 random_state=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.features_per_split = features_per_split
        self.random_state = random_state

    def fit(self, X, y):
        X, self.classes_, y_idx = _check_fit_input(X, y)
        self.n_features_in_ = X.shape[1]
        self.tree_ = train_tree(
            X, y_idx, len(self.classes_), self.max_depth, self.min_samples_split,
            self.features_per_split, np.random.default_rng(self.random_state),
        )
        return self

    def predict(self, X):
        X = _check_predict_input(self, X)
        return self.classes_[self.tree_.predict_index(X)]


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged information-gain trees with per-node feature subsampling.

    ``features_per_split=None`` means ``ceil(sqrt(n_features))``; pass
    ``"all"`` to consider every feature. Tree ``i`` draws from its own
    stream seeded by ``(random_state, i)``.
    """

    def __init__(self, n_trees=100, max_depth=None, min_samples_split=2,
                 features_per_split=None, bootstrap=True, random_state=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.features_per_split = features_per_split
        self.bootstrap = bootstrap
        self.random_state = random_state

    def _n_split_features(self, n_features):
        if self.features_per_split is None:
            return int(math.ceil(math.sqrt(n_features)))
        if self.features_per_split == "all":
            return None
        return int(self.features_per_split)

    def fit(self, X, y):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        X, self.classes_, y_idx = _check_fit_input(X, y)
        n, d = X.shape
        self.n_features_in_ = d
        m = self._n_split_features(d)
        self.trees_ = []
        for i in range(self.n_trees):
            rng = tree_rng(self.random_state, i)
            rows = rng.integers(n, size=n) if self.bootstrap else np.arange(n)
            self.trees_.append(
                train_tree(X, y_idx, len(self.classes_), self.max_depth,
                           self.min_samples_split, m, rng, rows)
            )
        return self

    def predict(self, X):
        X = _check_predict_input(self, X)
        return self.classes_[predict_forest(self.trees_, X, len(self.classes_))]


def predict_forest(trees, X, n_classes) -> np.ndarray:
    """Majority vote of tree predictions (class indices), ties to the lowest."""
    votes = np.zeros((X.shape[0], n_classes), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in trees:
        np.add.at(votes, (rows, tree.predict_index(X)), 1)
    return votes.argmax(axis=1)


def train_forest(X, y, n_trees=100, max_depth=None, features_per_split=None,
                 seed=0, bootstrap=True) -> RandomForest:
    return RandomForest(n_trees, max_depth, 2, features_per_split, bootstrap, seed).fit(X, y)
