"""Isolation forest core: random tree growth, path lengths, anomaly scores.

Trees are stored as flat parallel arrays (index 0 = root) so the hot
tree-walk loop can run through the compiled kernel; growth itself happens
here in numpy. Scores follow the classic normalization
s = 2^(-mean_path / c(subsample_size)), where c(n) is the expected path
length of an unsuccessful binary-search-tree lookup over n points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend

EULER_GAMMA = 0.5772156649


def c_factor(n: int) -> float:
    """Expected BST unsuccessful-search path length over n points.

    c(n) = 2 H(n-1) - 2 (n-1)/n with H(i) ~ ln(i) + Euler-Mascheroni.
    Defined as 0 for n <= 1 (a single point needs no split); strictly
    increasing for n >= 2.
    """
    if n <= 1:
        return 0.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


@dataclass(frozen=True)
class ForestParams:
    """Training parameters for an isolation forest.

    max_depth=None means the usual automatic limit,
    ceil(log2(effective subsample size)).
    """

    n_trees: int = 100
    subsample_size: int = 256
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.subsample_size < 2:
            raise ValueError(
                f"subsample_size must be >= 2, got {self.subsample_size}"
            )
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def depth_limit(self, n_points: int) -> int:
        if self.max_depth is not None:
            return self.max_depth
        return int(math.ceil(math.log2(n_points))) if n_points >= 2 else 0


class ITree:
    """One isolation tree as flat arrays.

    feature[i] >= 0 marks a split node (threshold/left/right valid);
    feature[i] == -1 marks a leaf holding leaf_size[i] training points.
    The per-node adjustment c(leaf_size) is precomputed once so both
    walk kernels add the exact same float64.
    """

    __slots__ = ("feature", "threshold", "left", "right", "leaf_size",
                 "n_features", "n_points", "_adjust")

    def __init__(self, feature, threshold, left, right, leaf_size, n_features):
        self.feature = np.ascontiguousarray(feature, dtype=np.int32)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.int32)
        self.right = np.ascontiguousarray(right, dtype=np.int32)
        self.leaf_size = np.ascontiguousarray(leaf_size, dtype=np.int64)
        self.n_features = int(n_features)
        self.n_points = int(self.leaf_size.sum())
        self._adjust = np.ascontiguousarray(
            [c_factor(int(m)) if f < 0 else 0.0
             for f, m in zip(self.feature, self.leaf_size)],
            dtype=np.float64,
        )

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def path_lengths(self, X) -> np.ndarray:
        """Path length of every row of X: edges from root + c(leaf size)."""
        X = _as_feature_matrix(X, self.n_features)
        return backend.path_lengths(X, self.feature, self.threshold,
                                    self.left, self.right, self._adjust)


def _as_feature_matrix(X, n_features: int) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if X.shape[1] < n_features:
        raise ValueError(
            f"dimensionality mismatch: model indexes {n_features} features, "
            f"data has {X.shape[1]}"
        )
    return X


def path_length(tree: ITree, x) -> float:
    """Path length of a single feature vector through one tree."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D feature vector")
    return float(tree.path_lengths(x[np.newaxis, :])[0])


def build_tree(subsample, params: ForestParams, rng: np.random.Generator) -> ITree:
    """Grow one isolation tree on a subsample by recursive random splits.

    At each node a feature is drawn uniformly among those with non-zero
    value range, the threshold uniformly inside (min, max) of that feature
    over the points in the node. Growth stops on single points, at the
    depth limit, or when every feature is constant.
    """
    X = np.ascontiguousarray(subsample, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("subsample must be a non-empty 2-D matrix")
    if not np.isfinite(X).all():
        raise ValueError("subsample contains non-finite values")
    k, d = X.shape
    limit = params.depth_limit(k)

    feature, threshold = [], []
    left, right, leaf_size = [], [], []
    # preorder growth: stack of (row indices, depth, parent index, is left child)
    stack = [(np.arange(k), 0, -1, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        idx = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = idx

        split = None
        if rows.size > 1 and depth < limit:
            pts = X[rows]
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
            usable = np.flatnonzero(hi > lo)
            if usable.size:
                f = int(usable[rng.integers(usable.size)])
                thr = float(rng.uniform(lo[f], hi[f]))
                if thr <= lo[f]:  # fp edge of the open interval
                    thr = float(np.nextafter(lo[f], hi[f]))
                mask = pts[:, f] < thr
                split = (f, thr, rows[mask], rows[~mask])

        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            leaf_size.append(rows.size)
        else:
            f, thr, lrows, rrows = split
            feature.append(f)
            threshold.append(thr)
            left.append(-1)
            right.append(-1)
            leaf_size.append(0)
            stack.append((rrows, depth + 1, idx, False))
            stack.append((lrows, depth + 1, idx, True))

    return ITree(feature, threshold, left, right, leaf_size, n_features=d)


class IForest:
    """Ordered collection of isolation trees with prefix-restricted scoring."""

    def __init__(self, trees, subsample_size: int, n_features: int):
        trees = list(trees)
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = trees
        self.subsample_size = int(subsample_size)
        self.n_features = int(n_features)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def path_length_matrix(self, X) -> np.ndarray:
        """(n_rows, n_trees) matrix of per-tree path lengths."""
        X = _as_feature_matrix(X, self.n_features)
        out = np.empty((X.shape[0], self.n_trees), dtype=np.float64)
        for j, tree in enumerate(self.trees):
            out[:, j] = backend.path_lengths(X, tree.feature, tree.threshold,
                                             tree.left, tree.right, tree._adjust)
        return out

    def score_samples(self, X, prefix_len: int | None = None) -> np.ndarray:
        """Anomaly score in (0, 1] per row, using the first prefix_len trees.

        prefix_len=None uses every tree. Scores above 0.5 correspond to
        mean path lengths below c(subsample_size).
        """
        k = self._check_prefix(prefix_len)
        H = self.path_length_matrix(X)
        return anomaly_score_from_path(sequential_prefix_mean(H, k),
                                       self.subsample_size)

    def subset(self, tree_indices) -> IForest:
        """New forest sharing the selected trees, in the given order."""
        trees = [self.trees[int(i)] for i in tree_indices]
        return IForest(trees, self.subsample_size, self.n_features)

    def _check_prefix(self, prefix_len: int | None) -> int:
        if prefix_len is None:
            return self.n_trees
        if not 1 <= prefix_len <= self.n_trees:
            raise ValueError(
                f"prefix_len must be in [1, {self.n_trees}], got {prefix_len}"
            )
        return int(prefix_len)


def sequential_prefix_mean(H: np.ndarray, k: int) -> np.ndarray:
    """Mean over the first k columns, accumulated strictly left to right.

    The same accumulation order is used for full-forest scoring and for
    the prefix sweep, so prefix k == n_trees reproduces full scores.
    """
    acc = np.zeros(H.shape[0], dtype=np.float64)
    for j in range(k):
        acc += H[:, j]
    return acc / k


def anomaly_score_from_path(mean_path, subsample_size: int):
    """Map mean path length to the (0, 1] anomaly score 2^(-h / c(n))."""
    norm = c_factor(subsample_size)
    if norm <= 0.0:
        raise ValueError("subsample_size must be >= 2 to normalize scores")
    return np.exp2(-np.asarray(mean_path, dtype=np.float64) / norm)


def fit_forest(data, params: ForestParams | None = None) -> IForest:
    """Grow params.n_trees trees, each on an independent uniform subsample.

    Subsamples are drawn without replacement, clipped to the data size.
    Per-tree generators are spawned from the master seed, so the result is
    identical no matter how tree growth is scheduled.
    """
    params = params if params is not None else ForestParams()
    X = np.ascontiguousarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("training data must be a 2-D matrix")
    n, d = X.shape
    if n < 2:
        raise ValueError(f"training data needs at least 2 rows, got {n}")
    if not np.isfinite(X).all():
        raise ValueError("training data contains non-finite values")

    k = min(params.subsample_size, n)
    trees = []
    for child in np.random.SeedSequence(params.seed).spawn(params.n_trees):
        rng = np.random.default_rng(child)
        rows = rng.choice(n, size=k, replace=False)
        trees.append(build_tree(X[rows], params, rng))
    return IForest(trees, subsample_size=k, n_features=d)


def score(forest: IForest, x, prefix_len: int | None = None) -> float:
    """Anomaly score of a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D feature vector")
    return float(forest.score_samples(x[np.newaxis, :], prefix_len)[0])


def predict_label(score_value: float, tau: float = 0.5) -> int:
    """1 iff the score strictly exceeds the threshold tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return int(score_value > tau)


def predict_labels(scores, tau: float = 0.5) -> np.ndarray:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return (np.asarray(scores, dtype=np.float64) > tau).astype(np.int64)
