"""Random forest regression built from CART trees.

Trees are grown to purity on bootstrap resamples.  At each node every
candidate feature is sorted once and all midpoint thresholds are scored in a
single pass with cumulative sums, so the split search costs O(n log n) per
feature.  Ties (within ``_TIE_TOL``) go to the lowest feature index, then the
lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DimensionalityMismatch, EmptyDataset

_TIE_TOL = 1e-12
_LEAF = -1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    features_per_split: int | None = None  # None = all features
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class RegressionTree:
    """Flat array representation; ``feature[i] == -1`` marks a leaf.

    ``impurity_decrease`` holds, per internal node, the drop in the sum of
    squared deviations divided by the tree's training-sample count, i.e. the
    sample-fraction-weighted variance reduction.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity_decrease: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == _LEAF

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != _LEAF
        while active.any():
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active[r] = self.feature[node[r]] != _LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@njit(cache=True)
def _grow(X, y, max_depth, feat_keys, k):
    """Grow one tree; returns the node arrays trimmed to the used length.

    Samples live in one index buffer that is partitioned in place, each node
    owning a contiguous slice.  ``feat_keys`` has one row of random keys per
    potential node when a feature subset is drawn, and zero rows otherwise.
    """
    n, d = X.shape
    cap = 2 * n - 1
    feature = np.full(cap, -1, dtype=np.intp)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.intp)
    right = np.full(cap, -1, dtype=np.intp)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.intp)
    decrease = np.zeros(cap)

    samples = np.arange(n)
    scratch = np.empty(n, dtype=np.intp)
    xs = np.empty(n)
    ys = np.empty(n)
    subset = feat_keys.shape[0] > 0

    stack_node = np.empty(cap, dtype=np.intp)
    stack_lo = np.empty(cap, dtype=np.intp)
    stack_hi = np.empty(cap, dtype=np.intp)
    stack_depth = np.empty(cap, dtype=np.intp)

    total = 0.0
    for i in range(n):
        total += y[i]
    value[0] = total / n
    count[0] = n
    n_nodes = 1
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    top = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        m = hi - lo
        if m < 2:
            continue
        ymin = y[samples[lo]]
        ymax = ymin
        for i in range(lo, hi):
            v = y[samples[i]]
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        # a summed mean can land an ulp off; pure nodes must return their value
        value[node] = min(max(value[node], ymin), ymax)
        if ymin == ymax:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        if subset:
            feats = np.sort(np.argsort(feat_keys[node])[:k])
        else:
            feats = np.arange(d)

        best_gain = -1.0
        best_f = -1
        best_t = 0.0
        for fi in range(feats.shape[0]):
            f = feats[fi]
            for i in range(m):
                xs[i] = X[samples[lo + i], f]
            order = np.argsort(xs[:m], kind="mergesort")
            s_tot = 0.0
            q_tot = 0.0
            for i in range(m):
                v = y[samples[lo + order[i]]]
                ys[i] = v
                s_tot += v
                q_tot += v * v
            sse_parent = q_tot - s_tot * s_tot / m
            tol = _TIE_TOL * max(1.0, abs(sse_parent))
            s_l = 0.0
            q_l = 0.0
            for i in range(m - 1):
                v = ys[i]
                s_l += v
                q_l += v * v
                x_here = xs[order[i]]
                x_next = xs[order[i + 1]]
                if not x_next > x_here:
                    continue
                n_l = i + 1.0
                n_r = m - n_l
                s_r = s_tot - s_l
                sse_l = q_l - s_l * s_l / n_l
                sse_r = (q_tot - q_l) - s_r * s_r / n_r
                gain = sse_parent - sse_l - sse_r
                if gain > tol and gain > best_gain + tol:
                    best_gain = gain
                    best_f = f
                    t = 0.5 * (x_here + x_next)
                    if not (x_here <= t and t < x_next):
                        t = x_here
                    best_t = t
        if best_f < 0:
            continue

        # stable partition of samples[lo:hi] around the threshold
        n_left = 0
        for i in range(lo, hi):
            s = samples[i]
            if X[s, best_f] <= best_t:
                scratch[n_left] = s
                n_left += 1
        j = n_left
        for i in range(lo, hi):
            s = samples[i]
            if not X[s, best_f] <= best_t:
                scratch[j] = s
                j += 1
        for i in range(m):
            samples[lo + i] = scratch[i]
        mid = lo + n_left

        feature[node] = best_f
        threshold[node] = best_t
        decrease[node] = best_gain / n
        for child, c_lo, c_hi in ((n_nodes, lo, mid), (n_nodes + 1, mid, hi)):
            acc = 0.0
            for i in range(c_lo, c_hi):
                acc += y[samples[i]]
            value[child] = acc / (c_hi - c_lo)
            count[child] = c_hi - c_lo
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        # right pushed first so the left subtree is expanded first
        stack_node[top] = right[node]
        stack_lo[top] = mid
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = left[node]
        stack_lo[top] = lo
        stack_hi[top] = mid
        stack_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        count[:n_nodes],
        decrease[:n_nodes],
    )


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    features_per_split: int | None = None,
    rng: np.random.Generator | None = None,
) -> RegressionTree:
    """Grow one CART regression tree on ``(X, y)`` as given (no resampling).

    A node becomes a leaf when it holds fewer than two samples, its targets
    are all equal, ``max_depth`` is reached, or no threshold lowers the sum of
    squared deviations.  Candidate thresholds are midpoints between adjacent
    distinct feature values and samples with ``x <= threshold`` go left.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if features_per_split is not None and features_per_split < d:
        if rng is None:
            raise ValueError("a feature subset per split needs an rng")
        # node i draws the features holding the k smallest keys of row i
        feat_keys = rng.random((max(2 * n - 1, 1), d))
        k = features_per_split
    else:
        feat_keys = np.empty((0, d))
        k = d
    arrays = _grow(X, y, -1 if max_depth is None else max_depth, feat_keys, k)
    return RegressionTree(*arrays)


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


@dataclass(frozen=True)
class ForestModel:
    config: ForestConfig
    feature_names: tuple[str, ...]
    trees: tuple[RegressionTree, ...]
    target_range: tuple[float, float]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        per_tree = np.stack([tree.predict(X) for tree in self.trees])
        # average offsets from the row minimum so identical tree outputs give
        # that value back exactly, then clip away any last-ulp overshoot
        lo, hi = per_tree.min(axis=0), per_tree.max(axis=0)
        mean = lo + (per_tree - lo).sum(axis=0) / len(self.trees)
        return np.clip(mean, lo, hi)

    def feature_importances(self) -> np.ndarray:
        return _mdi(self.trees, self.n_features)


def _check_X(X, d) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise DimensionalityMismatch(f"expected {d} features, got shape {X.shape}")
    return X


def train_forest(dataset, config: ForestConfig = ForestConfig()) -> ForestModel:
    X, y = dataset.X, dataset.y
    n = X.shape[0]
    if n == 0:
        raise EmptyDataset("cannot train a forest on an empty dataset")
    d = X.shape[1]
    if d < 1:
        raise EmptyDataset("dataset has no features")
    if config.features_per_split is not None and config.features_per_split > d:
        raise ValueError(f"features_per_split={config.features_per_split} exceeds d={d}")
    trees = []
    for t in range(config.n_trees):
        rng = tree_rng(config.seed, t)
        if config.bootstrap:
            sample = rng.integers(0, n, size=n)
            Xb, yb = X[sample], y[sample]
        else:
            Xb, yb = X, y
        trees.append(grow_tree(Xb, yb, config.max_depth, config.features_per_split, rng))
    return ForestModel(
        config=config,
        feature_names=tuple(dataset.feature_names),
        trees=tuple(trees),
        target_range=(float(y.min()), float(y.max())),
    )


def predict_forest(model: ForestModel, x) -> float:
    if hasattr(x, "as_tuple"):
        x = x.as_tuple()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionalityMismatch("predict_forest takes a single feature vector")
    return float(model.predict(x)[0])


def _mdi(trees, d) -> np.ndarray:
    """Mean decrease in impurity, averaged over trees and normalized to 1."""
    acc = np.zeros(d)
    for tree in trees:
        internal = ~tree.is_leaf
        per_tree = np.bincount(
            tree.feature[internal], weights=tree.impurity_decrease[internal], minlength=d
        )
        acc += per_tree
    acc /= len(trees)
    total = acc.sum()
    if total <= 0:
        # no split anywhere (e.g. constant target): nothing to attribute
        return np.full(d, 1.0 / d)
    return acc / total


def feature_importance(model: ForestModel) -> dict[str, float]:
    return dict(zip(model.feature_names, model.feature_importances().tolist()))
