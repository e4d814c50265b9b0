"""Compact binary model format (.tiws) and memory accounting.

Layout, all multi-byte fields little-endian:

    header   : magic "TIWS" (4) | version (1) | subsample size u32 | tree count u32
    per tree : node count u32, then per node a 1-byte kind flag followed by
               split  -> feature u16 | threshold f32 | left u32 | right u32
               leaf   -> size u32

Split records are 15 bytes, leaf records 5, the header 13. The format is
walkable in place on constrained targets; thresholds are rounded to 32-bit
floats on serialization (in-memory trees keep 64-bit).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forest import IForest, ITree

MAGIC = b"TIWS"
FORMAT_VERSION = 1
FILE_EXTENSION = ".tiws"

_KIND_SPLIT = 0
_KIND_LEAF = 1

_HEADER = struct.Struct("<4sBII")
_NODE_COUNT = struct.Struct("<I")
_KIND_FLAG = struct.Struct("<B")
_SPLIT_RECORD = struct.Struct("<BHfII")
_LEAF_RECORD = struct.Struct("<BI")
_SPLIT_BODY = struct.Struct("<HfII")
_LEAF_BODY = struct.Struct("<I")


class ModelFormatError(ValueError):
    """Malformed .tiws data."""


class BadMagicError(ModelFormatError):
    """The blob does not start with the TIWS magic."""


class TruncatedBlobError(ModelFormatError):
    """The blob ends before the declared content."""


class InvalidStructureError(ModelFormatError):
    """Field values describe an impossible forest (bad indices, cycles...)."""


def serialize(forest: IForest) -> bytes:
    """Deterministic bytes for a forest; identical forests yield identical blobs."""
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, forest.subsample_size,
                          forest.n_trees)]
    for tree in forest.trees:
        parts.append(serialize_tree(tree))
    return b"".join(parts)


def serialize_tree(tree: ITree) -> bytes:
    """One tree's blob section (node count + node records)."""
    parts = [_NODE_COUNT.pack(tree.node_count)]
    for i in range(tree.node_count):
        f = int(tree.feature[i])
        if f < 0:
            parts.append(_LEAF_RECORD.pack(_KIND_LEAF, int(tree.leaf_size[i])))
        else:
            if f >= 1 << 16:
                raise ValueError(
                    f"feature index {f} exceeds the 16-bit format limit"
                )
            parts.append(_SPLIT_RECORD.pack(_KIND_SPLIT, f,
                                            float(tree.threshold[i]),
                                            int(tree.left[i]),
                                            int(tree.right[i])))
    return b"".join(parts)


class _Reader:
    """Sequential reader that turns short reads into TruncatedBlobError."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.blob) - self.offset

    def unpack(self, fmt: struct.Struct):
        if self.remaining < fmt.size:
            raise TruncatedBlobError(
                f"truncated stream: needed {fmt.size} bytes at offset "
                f"{self.offset}, {self.remaining} left"
            )
        values = fmt.unpack_from(self.blob, self.offset)
        self.offset += fmt.size
        return values


def deserialize(blob: bytes) -> IForest:
    """Parse and validate a blob; scores match the source forest within
    32-bit threshold rounding."""
    r = _Reader(bytes(blob))
    magic, version, subsample_size, n_trees = r.unpack(_HEADER)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    if subsample_size < 2:
        raise InvalidStructureError(
            f"subsample size must be >= 2, got {subsample_size}"
        )
    if n_trees < 1:
        raise InvalidStructureError("model contains no trees")

    trees = [_read_tree(r) for _ in range(n_trees)]
    if r.remaining:
        raise ModelFormatError(f"{r.remaining} trailing bytes after the last tree")
    n_features = max(tree.n_features for tree in trees)
    return IForest(trees, subsample_size=subsample_size, n_features=n_features)


def _read_tree(r: _Reader) -> ITree:
    (n_nodes,) = r.unpack(_NODE_COUNT)
    if n_nodes < 1:
        raise InvalidStructureError("tree with zero nodes")
    if n_nodes * _LEAF_RECORD.size > r.remaining:
        raise TruncatedBlobError(
            f"truncated stream: {n_nodes} nodes cannot fit in "
            f"{r.remaining} remaining bytes"
        )

    feature = np.empty(n_nodes, dtype=np.int32)
    threshold = np.zeros(n_nodes, dtype=np.float64)
    left = np.full(n_nodes, -1, dtype=np.int32)
    right = np.full(n_nodes, -1, dtype=np.int32)
    leaf_size = np.zeros(n_nodes, dtype=np.int64)

    for i in range(n_nodes):
        (kind,) = r.unpack(_KIND_FLAG)
        if kind == _KIND_SPLIT:
            f, thr, lchild, rchild = r.unpack(_SPLIT_BODY)
            if lchild >= n_nodes or rchild >= n_nodes:
                raise InvalidStructureError(
                    f"child index out of range at node {i}: "
                    f"left={lchild}, right={rchild}, nodes={n_nodes}"
                )
            feature[i] = f
            threshold[i] = thr
            left[i] = lchild
            right[i] = rchild
        elif kind == _KIND_LEAF:
            (size,) = r.unpack(_LEAF_BODY)
            feature[i] = -1
            leaf_size[i] = size
        else:
            raise InvalidStructureError(f"unknown node kind {kind} at node {i}")

    _check_topology(feature, left, right)
    n_features = int(feature.max()) + 1 if (feature >= 0).any() else 1
    return ITree(feature, threshold, left, right, leaf_size,
                 n_features=n_features)


def _check_topology(feature, left, right) -> None:
    """Every node reachable from the root exactly once (no cycles, no orphans)."""
    n = len(feature)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    visited = 0
    while stack:
        i = stack.pop()
        if seen[i]:
            raise InvalidStructureError(f"node {i} referenced more than once")
        seen[i] = True
        visited += 1
        if feature[i] >= 0:
            stack.append(int(left[i]))
            stack.append(int(right[i]))
    if visited != n:
        raise InvalidStructureError(
            f"{n - visited} node(s) unreachable from the root"
        )


def save_model(forest: IForest, path) -> int:
    """Write the blob to disk; returns the byte size."""
    blob = serialize(forest)
    Path(path).write_bytes(blob)
    return len(blob)


def load_model(path) -> IForest:
    return deserialize(Path(path).read_bytes())


@dataclass(frozen=True)
class MemoryReport:
    """Node counts and serialized size next to the t*(2*psi - 1) bound."""

    per_tree_nodes: list[int]
    total_nodes: int
    serialized_bytes: int
    node_bound: int

    def to_dict(self) -> dict:
        return {
            "per_tree_nodes": list(self.per_tree_nodes),
            "total_nodes": self.total_nodes,
            "serialized_bytes": self.serialized_bytes,
            "node_bound": self.node_bound,
        }


def memory_report(forest: IForest) -> MemoryReport:
    per_tree = [tree.node_count for tree in forest.trees]
    return MemoryReport(
        per_tree_nodes=per_tree,
        total_nodes=sum(per_tree),
        serialized_bytes=len(serialize(forest)),
        node_bound=forest.n_trees * (2 * forest.subsample_size - 1),
    )
