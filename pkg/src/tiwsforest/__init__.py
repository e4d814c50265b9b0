"""Isolation Forest anomaly detection with weakly supervised tree selection.

Grows standard isolation forests, ranks the trees on a small labeled
subset, keeps the best-prefix sub-forest (TiWS selection), and ships the
result in a compact binary format sized for microcontroller-class targets.
"""

from .backend import BACKEND
from .datasets import (LabeledDataset, SplitSpec, load_csv, make_toy,
                       sample_labeled_fraction, stratified_split, write_csv)
from .forest import (EULER_GAMMA, ForestParams, IForest, ITree,
                     anomaly_score_from_path, build_tree, c_factor,
                     fit_forest, path_length, predict_label, predict_labels,
                     score)
from .metrics import NoPositivesError, PRCurve, average_precision, pr_curve
from .selection import (STRATEGIES, SelectionResult, TreeRanking,
                        order_trees, prefix_ap_curve, rank_trees,
                        select_forest, select_from_forest, tiws_fit)
from .serialize import (BadMagicError, InvalidStructureError, MemoryReport,
                        ModelFormatError, TruncatedBlobError, deserialize,
                        load_model, memory_report, save_model, serialize)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BadMagicError",
    "EULER_GAMMA",
    "ForestParams",
    "IForest",
    "ITree",
    "InvalidStructureError",
    "LabeledDataset",
    "MemoryReport",
    "ModelFormatError",
    "NoPositivesError",
    "PRCurve",
    "STRATEGIES",
    "SelectionResult",
    "SplitSpec",
    "TreeRanking",
    "TruncatedBlobError",
    "anomaly_score_from_path",
    "average_precision",
    "build_tree",
    "c_factor",
    "deserialize",
    "fit_forest",
    "load_csv",
    "load_model",
    "make_toy",
    "memory_report",
    "order_trees",
    "path_length",
    "pr_curve",
    "predict_label",
    "predict_labels",
    "prefix_ap_curve",
    "rank_trees",
    "sample_labeled_fraction",
    "save_model",
    "score",
    "select_forest",
    "select_from_forest",
    "serialize",
    "stratified_split",
    "tiws_fit",
    "write_csv",
]
