"""Pure-python (numpy) tree-walk kernel, used when the compiled one is absent.

Must stay numerically identical to _pathlen_cy: integer depth counting plus
one float64 add of the precomputed leaf adjustment.
"""

import numpy as np

NAME = "python"


def path_lengths(X, feature, threshold, left, right, adjust):
    """Path length of every row of X through one flat-array tree.

    Leaves carry feature = -1; adjust holds c(leaf_size) per node (0 for
    splits). Returns edges-from-root + adjustment, as float64.
    """
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.float64)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        cur = node[active]
        go_left = X[active, feature[cur]] < threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
        depth[active] += 1.0
        active = active[feature[node[active]] >= 0]
    return depth + adjust[node]
