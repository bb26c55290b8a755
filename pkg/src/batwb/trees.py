"""CART regression trees and random forests.

Trees are stored as flat node arrays. Splits maximize variance reduction;
thresholds sit halfway between adjacent distinct sorted values and samples
with ``x <= threshold`` go left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DataError, DomainError

SCHEMA_VERSION = 1


@dataclass
class TreeOptions:
    max_depth: int = 8
    min_leaf: int = 5
    feature_rate: float = 1.0   # fraction of features tried per split

    def __post_init__(self):
        if self.max_depth < 0:
            raise DomainError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise DomainError("min_leaf must be >= 1")
        if not 0 < self.feature_rate <= 1:
            raise DomainError("feature_rate must lie in (0, 1]")


@dataclass
class RegressionTree:
    feature: np.ndarray     # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    n_features: int

    @property
    def n_nodes(self):
        return int(self.feature.size)

    @property
    def depth(self):
        d = np.zeros(self.n_nodes, int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                d[self.left[i]] = d[self.right[i]] = d[i] + 1
        return int(d.max())

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "n_samples": self.n_samples.tolist(),
                "n_features": self.n_features}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["feature"], int), np.array(d["threshold"], float),
                   np.array(d["left"], int), np.array(d["right"], int),
                   np.array(d["value"], float), np.array(d["n_samples"], int),
                   int(d["n_features"]))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DataError("X and y lengths differ")
    if y.size == 0:
        raise DataError("empty training set")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite training data")
    return X, y


def tree_fit(X, y, opts: TreeOptions | None = None, rng=None) -> RegressionTree:
    """Greedy variance-reduction tree; deterministic unless features are subsampled."""
    opts = opts or TreeOptions()
    X, y = _check_xy(X, y)
    n, d = X.shape
    if n < opts.min_leaf:
        raise DomainError("fewer samples than min_leaf")
    n_try = max(1, int(round(opts.feature_rate * d)))
    if n_try < d and rng is None:
        raise DomainError("feature subsampling needs an rng")
    split = kernels.best_split

    feat, thr, lft, rgt, val, cnt = [], [], [], [], [], []

    def new_node(idx):
        feat.append(-1)
        thr.append(0.0)
        lft.append(-1)
        rgt.append(-1)
        val.append(float(y[idx].mean()))
        cnt.append(int(idx.size))
        return len(feat) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        m = idx.size
        if depth >= opts.max_depth or m < 2 * opts.min_leaf:
            continue
        yi = y[idx]
        yc = yi - yi.mean()
        if not np.any(yc):
            continue
        base = yc.sum() ** 2 / m
        feats = np.arange(d) if n_try == d else np.sort(rng.choice(d, n_try, replace=False))
        best = (base + 1e-12 * float(yc @ yc), -1, -1, None)
        for f in feats:
            xs = X[idx, f]
            order = np.argsort(xs, kind="stable")
            xo = np.ascontiguousarray(xs[order])
            score, pos = split(xo, np.ascontiguousarray(yc[order]), opts.min_leaf)
            if pos > 0 and score > best[0]:
                best = (score, int(f), pos, (order, xo))
        if best[1] < 0:
            continue
        _, f, pos, (order, xo) = best
        a, b = xo[pos - 1], xo[pos]
        t = 0.5 * (a + b)
        if not a <= t < b:
            t = a
        left_idx = idx[order[:pos]]
        right_idx = idx[order[pos:]]
        feat[node] = f
        thr[node] = float(t)
        lft[node] = new_node(left_idx)
        rgt[node] = new_node(right_idx)
        stack.append((rgt[node], right_idx, depth + 1))
        stack.append((lft[node], left_idx, depth + 1))
    return RegressionTree(np.array(feat, int), np.array(thr, float), np.array(lft, int),
                          np.array(rgt, int), np.array(val, float), np.array(cnt, int), d)


def tree_predict(tree: RegressionTree, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if tree.n_features == 1 else X[None, :]
    if X.shape[1] != tree.n_features:
        raise DataError(f"expected {tree.n_features} features")
    node = np.zeros(X.shape[0], int)
    active = tree.feature[node] >= 0
    while active.any():
        k = node[active]
        f = tree.feature[k]
        go_left = X[np.flatnonzero(active), f] <= tree.threshold[k]
        node[active] = np.where(go_left, tree.left[k], tree.right[k])
        active = tree.feature[node] >= 0
    return tree.value[node]


@dataclass
class ForestOptions:
    T: int = 50
    max_depth: int = 8
    min_leaf: int = 5
    feature_rate: float = 0.6
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise DomainError("T must be >= 1")

    def tree_options(self):
        return TreeOptions(self.max_depth, self.min_leaf, self.feature_rate)


@dataclass
class RandomForest:
    trees: list
    options: ForestOptions
    seeds: list = field(default_factory=list)
    feature_names: list | None = None

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "kind": "random_forest",
                "options": self.options.__dict__, "seeds": [int(s) for s in self.seeds],
                "feature_names": self.feature_names,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") != "random_forest":
            raise DataError("not a random-forest artifact")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DataError(f"unsupported schema version {d.get('schema_version')}")
        return cls([RegressionTree.from_dict(t) for t in d["trees"]],
                   ForestOptions(**d["options"]), d.get("seeds", []), d.get("feature_names"))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def forest_fit(X, y, opts: ForestOptions | None = None, feature_names=None) -> RandomForest:
    """Bootstrap-aggregated trees with per-split feature subsampling."""
    opts = opts or ForestOptions()
    X, y = _check_xy(X, y)
    n = y.size
    topts = opts.tree_options()
    trees, seeds = [], []
    for ss in np.random.SeedSequence(opts.seed).spawn(opts.T):
        s = int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 63))
        rng = np.random.default_rng(s)
        idx = rng.integers(0, n, n) if opts.bootstrap else np.arange(n)
        trees.append(tree_fit(X[idx], y[idx], topts, rng))
        seeds.append(s)
    return RandomForest(trees, opts, seeds,
                        list(feature_names) if feature_names is not None else None)


def forest_predict(forest: RandomForest, X) -> np.ndarray:
    preds = np.array([tree_predict(t, X) for t in forest.trees])
    return preds.sum(axis=0) / len(forest.trees)
