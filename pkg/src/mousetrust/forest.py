"""CART decision tree and bagged random forest over flattened windows.

Splits minimize weighted child Gini over midpoint thresholds between
consecutive distinct sorted values. Ties go to the lowest feature index,
then the lowest threshold, so fits are reproducible across platforms. A node
splits whenever it is impure and any candidate threshold exists; no minimum
impurity improvement is demanded, so label-consistent training data is
always memorized at unbounded depth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DataError

TREE_FORMAT = "mousetrust-tree"
FOREST_FORMAT = "mousetrust-forest"
FORMAT_VERSION = 1

DEFAULT_MAX_DEPTH = 12
DEFAULT_MIN_SAMPLES_SPLIT = 2
DEFAULT_N_TREES = 100

LEAF = -1


@dataclass(frozen=True)
class TreeConfig:
    max_depth: Optional[int] = DEFAULT_MAX_DEPTH  # None = unbounded
    min_samples_split: int = DEFAULT_MIN_SAMPLES_SPLIT
    class_weight: str = "none"  # "none" or "balanced"
    seed: int = 0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be >= 1 or None")
        if self.min_samples_split < 2:
            raise DataError("min_samples_split must be >= 2")
        if self.class_weight not in ("none", "balanced"):
            raise DataError("class_weight must be 'none' or 'balanced'")


@dataclass(frozen=True)
class DecisionTree:
    """Flat node arrays; feature[i] == -1 marks node i as a leaf."""

    feature: np.ndarray  # (nodes,) int32, -1 for leaves
    threshold: np.ndarray  # (nodes,) float64
    left: np.ndarray  # (nodes,) int32
    right: np.ndarray  # (nodes,) int32
    value: np.ndarray  # (nodes,) float64, class-1 fraction
    count: np.ndarray  # (nodes,) int64, training samples at node
    width: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max(initial=0))


def _class_weights(y: np.ndarray, mode: str) -> np.ndarray:
    if mode == "none":
        return np.ones(y.shape[0], dtype=np.float64)
    n = y.shape[0]
    weights = np.ones(n, dtype=np.float64)
    for cls in (0, 1):
        mask = y == cls
        n_cls = int(mask.sum())
        if n_cls:
            weights[mask] = n / (2.0 * n_cls)
    return weights


def _best_split(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, features: np.ndarray
) -> Optional[tuple[float, int, float]]:
    """Lowest weighted-Gini (score, feature, threshold) among candidates.

    Features must be passed in ascending order; replacement happens only on a
    strict score decrease, which realizes the lowest-feature tie rule, and
    np.argmin's first-minimum rule realizes the lowest-threshold tie rule.
    """
    best: Optional[tuple[float, int, float]] = None
    wy = w * y
    for f in features:
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        boundaries = np.flatnonzero(xs[:-1] < xs[1:])
        if boundaries.size == 0:
            continue
        cum_w = np.cumsum(w[order])
        cum_w1 = np.cumsum(wy[order])
        total_w = cum_w[-1]
        total_w1 = cum_w1[-1]
        lw = cum_w[boundaries]
        l1 = cum_w1[boundaries]
        rw = total_w - lw
        r1 = total_w1 - l1
        # the squared shares are summed before the subtraction so that
        # mirror-image partitions score bitwise-identically and exact ties
        # resolve by candidate order, not by rounding
        gini_left = 1.0 - ((l1 / lw) ** 2 + ((lw - l1) / lw) ** 2)
        gini_right = 1.0 - ((r1 / rw) ** 2 + ((rw - r1) / rw) ** 2)
        score = (lw * gini_left + rw * gini_right) / total_w
        j = int(np.argmin(score))
        if best is None or score[j] < best[0]:
            b = boundaries[j]
            threshold = (xs[b] + xs[b + 1]) / 2.0
            if threshold >= xs[b + 1]:
                # adjacent representable floats: fall back to the left value
                # so the right child stays non-empty under value <= threshold
                threshold = float(xs[b])
            best = (float(score[j]), int(f), float(threshold))
    return best


def fit_tree(
    config: TreeConfig,
    X: np.ndarray,
    y: np.ndarray,
    max_features: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> DecisionTree:
    """Greedy CART fit. max_features draws that many features per split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training matrix must be non-empty and 2-D")
    if y.shape != (X.shape[0],):
        raise DataError("labels must align with rows")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    y = y.astype(np.float64)
    n, d = X.shape
    if max_features is not None and not (1 <= max_features <= d):
        raise DataError("max_features out of range")
    if max_features is not None and rng is None:
        rng = np.random.default_rng(np.random.SeedSequence((config.seed,)))
    weights = _class_weights(y, config.class_weight)
    all_features = np.arange(d)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    count: list[int] = []

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        count.append(0)
        return len(feature) - 1

    root = new_node()
    # LIFO build order is fixed so per-split feature draws are reproducible
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        sub_y = y[idx]
        sub_w = weights[idx]
        total_w = sub_w.sum()
        frac = float((sub_w * sub_y).sum() / total_w)
        value[node] = frac
        count[node] = int(idx.shape[0])

        pure = frac == 0.0 or frac == 1.0
        depth_ok = config.max_depth is None or depth < config.max_depth
        size_ok = idx.shape[0] >= config.min_samples_split
        if pure or not depth_ok or not size_ok:
            continue
        sub_X = X[idx]
        if max_features is not None and max_features < d:
            chosen = np.sort(rng.choice(d, size=max_features, replace=False))
            split = _best_split(sub_X, sub_y, sub_w, chosen)
            if split is None:
                # sampled features constant here; widen to the full set so an
                # impure node is never abandoned while separable
                split = _best_split(sub_X, sub_y, sub_w, all_features)
        else:
            split = _best_split(sub_X, sub_y, sub_w, all_features)
        if split is None:
            continue  # identical rows: unsplittable mixed leaf
        _, f, thr = split
        go_left = sub_X[:, f] <= thr
        left_child = new_node()
        right_child = new_node()
        feature[node] = f
        threshold[node] = thr
        left[node] = left_child
        right[node] = right_child
        stack.append((right_child, idx[~go_left], depth + 1))
        stack.append((left_child, idx[go_left], depth + 1))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
        count=np.array(count, dtype=np.int64),
        width=d,
    )


def tree_predict(tree: DecisionTree, row: np.ndarray) -> float:
    """Descend branches (value <= threshold goes left); leaf class-1 fraction."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (tree.width,):
        raise DataError(f"row width {row.shape} does not match training width {tree.width}")
    node = 0
    while tree.feature[node] != LEAF:
        if row[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return float(tree.value[node])


def tree_predict_matrix(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Vectorized batch prediction by routing index masks down the tree."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.width:
        raise DataError(f"matrix width must be {tree.width}")
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(0, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if tree.feature[node] == LEAF:
            out[idx] = tree.value[node]
            continue
        go_left = X[idx, tree.feature[node]] <= tree.threshold[node]
        stack.append((int(tree.left[node]), idx[go_left]))
        stack.append((int(tree.right[node]), idx[~go_left]))
    return out


@dataclass(frozen=True)
class RandomForest:
    trees: tuple[DecisionTree, ...]
    seed: int
    bootstrap: bool = True
    subsample_features: bool = True

    def __post_init__(self):
        if not self.trees:
            raise DataError("forest needs at least one tree")

    @property
    def width(self) -> int:
        return self.trees[0].width


def fit_forest(
    config: TreeConfig,
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = DEFAULT_N_TREES,
    seed: int = 0,
    bootstrap: bool = True,
    subsample_features: bool = True,
) -> RandomForest:
    """Bagged CART ensemble with per-split sqrt(d) feature sampling.

    Member i derives its generator from (seed, i), so the forest is identical
    no matter how members are scheduled.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if n_trees < 1:
        raise DataError("n_trees must be >= 1")
    n, d = X.shape
    max_features = max(1, int(math.isqrt(d))) if subsample_features else None
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        if bootstrap:
            draw = rng.integers(0, n, size=n)
            Xi, yi = X[draw], y[draw]
        else:
            Xi, yi = X, y
        member_config = replace(config, seed=seed)
        trees.append(fit_tree(member_config, Xi, yi, max_features=max_features, rng=rng))
    return RandomForest(tuple(trees), seed, bootstrap, subsample_features)


def forest_predict(forest: RandomForest, row: np.ndarray) -> float:
    """Arithmetic mean of member leaf fractions."""
    total = 0.0
    for tree in forest.trees:
        total += tree_predict(tree, row)
    return total / len(forest.trees)


def forest_predict_matrix(forest: RandomForest, X: np.ndarray) -> np.ndarray:
    acc = np.zeros(np.asarray(X).shape[0], dtype=np.float64)
    for tree in forest.trees:
        acc += tree_predict_matrix(tree, X)
    return acc / len(forest.trees)


def tree_to_dict(tree: DecisionTree) -> dict:
    return {
        "format": TREE_FORMAT,
        "version": FORMAT_VERSION,
        "width": tree.width,
        "feature": tree.feature.tolist(),
        "threshold": [float(t) for t in tree.threshold],
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": [float(v) for v in tree.value],
        "count": tree.count.tolist(),
    }


def tree_from_dict(payload: dict) -> DecisionTree:
    if payload.get("format") != TREE_FORMAT:
        raise DataError("not a serialized decision tree")
    if payload.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported tree format version {payload.get('version')}")
    return DecisionTree(
        feature=np.array(payload["feature"], dtype=np.int32),
        threshold=np.array(payload["threshold"], dtype=np.float64),
        left=np.array(payload["left"], dtype=np.int32),
        right=np.array(payload["right"], dtype=np.int32),
        value=np.array(payload["value"], dtype=np.float64),
        count=np.array(payload["count"], dtype=np.int64),
        width=int(payload["width"]),
    )


def forest_to_dict(forest: RandomForest) -> dict:
    return {
        "format": FOREST_FORMAT,
        "version": FORMAT_VERSION,
        "seed": forest.seed,
        "bootstrap": forest.bootstrap,
        "subsample_features": forest.subsample_features,
        "trees": [tree_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(payload: dict) -> RandomForest:
    if payload.get("format") != FOREST_FORMAT:
        raise DataError("not a serialized random forest")
    if payload.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported forest format version {payload.get('version')}")
    return RandomForest(
        trees=tuple(tree_from_dict(t) for t in payload["trees"]),
        seed=int(payload["seed"]),
        bootstrap=bool(payload["bootstrap"]),
        subsample_features=bool(payload["subsample_features"]),
    )


def save_tree_json(path, tree: DecisionTree) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh)


def load_tree_json(path) -> DecisionTree:
    with open(path, "r", encoding="utf-8") as fh:
        return tree_from_dict(json.load(fh))
