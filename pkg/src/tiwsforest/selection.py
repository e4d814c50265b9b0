"""Weakly supervised tree ranking and prefix-forest selection (TiWS).

A small labeled subset ranks the already-grown trees by per-tree average
precision, every prefix of the ranking is evaluated as its own sub-forest,
and the largest prefix attaining the maximum AP is kept. Trees are never
regrown; the selected forest shares the parent's tree objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import LabeledDataset
from .forest import (ForestParams, IForest, anomaly_score_from_path,
                     fit_forest)
from .metrics import average_precision

STRATEGIES = ("best", "worst", "random")


@dataclass(frozen=True)
class TreeRanking:
    """Per-tree AP (indexed by original tree id) and an evaluation order."""

    per_tree_ap: np.ndarray
    order: np.ndarray

    def __post_init__(self):
        if sorted(self.order.tolist()) != list(range(len(self.per_tree_ap))):
            raise ValueError("order must be a permutation of the tree indices")


@dataclass(frozen=True)
class SelectionResult:
    """Diagnostics of one selection run.

    prefix_ap[i-1] is the AP of the sub-forest made of the first i trees
    in ranking order; selected_size is the largest prefix attaining the
    maximum of that curve.
    """

    ranking: TreeRanking
    prefix_ap: np.ndarray
    selected_size: int
    selected_tree_indices: list[int]

    def to_dict(self) -> dict:
        return {
            "per_tree_ap": self.ranking.per_tree_ap.tolist(),
            "prefix_ap": self.prefix_ap.tolist(),
            "selected_size": self.selected_size,
            "selected_tree_indices": list(self.selected_tree_indices),
        }


def rank_trees(forest: IForest, labeled: LabeledDataset) -> np.ndarray:
    """AP of each tree alone on the labeled data.

    The single-tree score is the negative path length, which ranks points
    identically to the normalized anomaly score.
    """
    labels = _require_labels(labeled)
    H = forest.path_length_matrix(labeled.features)
    return np.array([average_precision(-H[:, j], labels)
                     for j in range(forest.n_trees)])


def order_trees(per_tree_ap, strategy: str, seed: int | None = None) -> TreeRanking:
    """Tree evaluation order: best (AP desc), worst (AP asc), or random.

    AP ties break by ascending original tree index; random permutations
    are reproducible from their seed.
    """
    per_tree_ap = np.asarray(per_tree_ap, dtype=np.float64)
    if per_tree_ap.size == 0:
        raise ValueError("per_tree_ap must be non-empty")
    if strategy == "best":
        order = np.argsort(-per_tree_ap, kind="stable")
    elif strategy == "worst":
        order = np.argsort(per_tree_ap, kind="stable")
    elif strategy == "random":
        order = np.random.default_rng(seed).permutation(per_tree_ap.size)
    else:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    return TreeRanking(per_tree_ap=per_tree_ap, order=order.astype(np.int64))


def prefix_ap_curve(forest: IForest, ranking: TreeRanking,
                    labeled: LabeledDataset) -> np.ndarray:
    """AP of every prefix sub-forest, sizes 1..n_trees in ranking order.

    Per-point path lengths are computed once; prefix means come from a
    running sum, and each prefix is scored with the parent forest's
    normalizer so the final entry matches full-forest scoring.
    """
    labels = _require_labels(labeled)
    if len(ranking.order) != forest.n_trees:
        raise ValueError(
            f"ranking covers {len(ranking.order)} trees, forest has {forest.n_trees}"
        )
    H = forest.path_length_matrix(labeled.features)
    acc = np.zeros(H.shape[0], dtype=np.float64)
    out = np.empty(forest.n_trees, dtype=np.float64)
    for i, tree_idx in enumerate(ranking.order):
        acc += H[:, tree_idx]
        scores = anomaly_score_from_path(acc / (i + 1), forest.subsample_size)
        out[i] = average_precision(scores, labels)
    return out


def select_forest(prefix_ap) -> int:
    """Largest prefix size attaining the maximum AP (ties favor more trees)."""
    prefix_ap = np.asarray(prefix_ap, dtype=np.float64)
    if prefix_ap.size == 0:
        raise ValueError("prefix AP curve must be non-empty")
    return int(np.flatnonzero(prefix_ap == prefix_ap.max())[-1]) + 1


def select_from_forest(forest: IForest, labeled: LabeledDataset):
    """Rank, sweep prefixes, and select on an already-trained forest.

    Returns (reduced forest, SelectionResult); the reduced forest holds the
    selected trees in ranked order, sharing the parent's tree objects.
    """
    per_tree_ap = rank_trees(forest, labeled)
    ranking = order_trees(per_tree_ap, "best")
    curve = prefix_ap_curve(forest, ranking, labeled)
    size = select_forest(curve)
    chosen = [int(i) for i in ranking.order[:size]]
    result = SelectionResult(ranking=ranking, prefix_ap=curve,
                             selected_size=size, selected_tree_indices=chosen)
    return forest.subset(chosen), result


def tiws_fit(train_features, labeled: LabeledDataset,
             params: ForestParams | None = None):
    """Unsupervised forest growth followed by weakly supervised selection.

    Grows the full forest on the (unlabeled) training matrix, then ranks
    and prunes it using only the labeled subset. Returns
    (reduced forest, SelectionResult).
    """
    forest = fit_forest(train_features, params)
    return select_from_forest(forest, labeled)


def _require_labels(labeled: LabeledDataset) -> np.ndarray:
    if labeled.labels is None:
        raise ValueError(f"dataset {labeled.name!r} has no labels")
    return labeled.labels
