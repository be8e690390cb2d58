"""Random forest of axis-aligned Gini trees."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

# relative slack when comparing split scores so float noise cannot break the tie rule
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ForestHyper:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    features_per_split: Optional[int] = None   # None -> ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")

    def resolved_features(self, d: int) -> int:
        k = self.features_per_split or math.ceil(math.sqrt(d))
        if not 1 <= k <= d:
            raise ValueError(f"features_per_split must lie in [1, {d}], got {k}")
        return k

    def to_dict(self):
        return asdict(self)


@dataclass
class Tree:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray       # (nodes, classes) training class counts

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax picks the earliest class on ties
        return np.argmax(self.counts[self.apply(X)], axis=1)

    def to_dict(self, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"leaf": self.counts[i].astype(int).tolist()}
        return {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                "left": self.to_dict(int(self.left[i])), "right": self.to_dict(int(self.right[i]))}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        feature, threshold, left, right, counts = [], [], [], [], []

        def add(node):
            i = len(feature)
            feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
            counts.append(None)
            if "leaf" in node:
                counts[i] = node["leaf"]
                return i, np.asarray(node["leaf"], dtype=float)
            li, lc = add(node["left"])
            ri, rc = add(node["right"])
            feature[i], threshold[i] = int(node["feature"]), float(node["threshold"])
            left[i], right[i] = li, ri
            counts[i] = (lc + rc).tolist()
            return i, lc + rc

        add(d)
        return cls(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                   np.array(counts, dtype=float))


def best_split(X: np.ndarray, y_onehot: np.ndarray, features) -> Optional[tuple[int, float]]:
    """Lowest weighted Gini over ``features`` and all adjacent-value midpoints.

    Ties resolve to the lowest feature index, then the lowest threshold.
    """
    features = np.sort(np.asarray(features, dtype=int))
    n = X.shape[0]
    if n < 2 or features.size == 0:
        return None
    Xf = X[:, features]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)                  # (n, k)
    left = np.cumsum(y_onehot[order], axis=0)[:-1]              # (n-1, k, C)
    total = y_onehot.sum(axis=0)
    right = total - left
    nl = np.arange(1, n)[:, None]
    nr = n - nl
    # maximizing sum(c_l^2)/n_l + sum(c_r^2)/n_r minimizes weighted Gini
    score = (left ** 2).sum(axis=2) / nl + (right ** 2).sum(axis=2) / nr
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    best = score.max()
    near = score >= best - _TIE_RTOL * abs(best)
    # first feature (columns sorted ascending) then first position (ascending threshold)
    col = int(np.flatnonzero(near.any(axis=0))[0])
    pos = int(np.flatnonzero(near[:, col])[0])
    thr = 0.5 * (xs[pos, col] + xs[pos + 1, col])
    if not thr < xs[pos + 1, col]:   # midpoint rounded up onto the right value
        thr = xs[pos, col]
    return int(features[col]), float(thr)


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    return 0.0 if n == 0 else 1.0 - float(((counts / n) ** 2).sum())


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, hyper: ForestHyper,
              rng: np.random.Generator) -> Tree:
    d = X.shape[1]
    k = hyper.resolved_features(d)
    onehot = np.eye(n_classes)[y]
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
        counts.append(onehot[idx].sum(axis=0))
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        if (np.count_nonzero(c) <= 1 or idx.size < hyper.min_samples_split
                or (hyper.max_depth is not None and depth >= hyper.max_depth)):
            continue
        perm = rng.permutation(d)
        split = best_split(X[idx], onehot[idx], perm[:k])
        # no usable candidate: keep drawing from the remaining features
        j = k
        while split is None and j < d:
            split = best_split(X[idx], onehot[idx], perm[j:j + 1])
            j += 1
        if split is None:
            continue
        f, t = split
        mask = X[idx, f] <= t
        li, ri = new_node(idx[mask]), new_node(idx[~mask])
        feature[node], threshold[node], left[node], right[node] = f, t, li, ri
        stack.append((ri, idx[~mask], depth + 1))
        stack.append((li, idx[mask], depth + 1))
    return Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                np.array(counts))


def fit_forest(X: np.ndarray, y: np.ndarray, n_classes: int, hyper: ForestHyper) -> list[Tree]:
    """Tree ``t`` draws its bootstrap and candidate features from ``default_rng([seed, t])``."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    trees = []
    n = X.shape[0]
    for t in range(hyper.n_trees):
        rng = np.random.default_rng([hyper.seed, t])
        rows = rng.integers(0, n, size=n) if hyper.bootstrap else np.arange(n)
        trees.append(grow_tree(X[rows], y[rows], n_classes, hyper, rng))
    return trees


def forest_vote_fractions(trees: list[Tree], X: np.ndarray, n_classes: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    votes = np.zeros((X.shape[0], n_classes))
    rows = np.arange(X.shape[0])
    for tree in trees:
        np.add.at(votes, (rows, tree.predict(X)), 1.0)
    return votes / len(trees)
