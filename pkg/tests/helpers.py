"""Hand-built fixtures shared across test modules.

The central one is ``worked_example_tree``: a two-level hierarchy whose
grid shape (root 3 rows x 2 cols, one 2x2 child under root unit (0, 0))
makes leaf coordinates computable by hand, and whose per-leaf sample
counts and labels are fixed so rendering checks have exact expectations.
"""

import numpy as np

from ghsomkit import DataMatrix, GhsomParams, GhsomTree
from ghsomkit.ghsom import SomMap

# leaf path -> labels of the samples assigned there (count = len of list).
# Mixtures are deliberate: "0x0-1x1" has a 2-2-1 majority tie, "0x0-0x0"
# is 75% pure, and the root leaves "1x0"/"0x1" carry the 75:25 pair used
# for the area-ratio check.
WORKED_LEAF_LABELS = {
    "0x0-0x0": ["alpha"] * 15 + ["beta"] * 5,
    "0x0-1x0": ["alpha"] * 10,
    "0x0-0x1": ["beta"] * 9 + ["gamma"] * 6,
    "0x0-1x1": ["alpha", "alpha", "beta", "beta", "gamma"],
    "1x0": ["beta"] * 75,
    "0x1": ["gamma"] * 25,
    "1x1": ["alpha"] * 24 + ["beta"] * 6,
    "0x2": ["gamma"] * 11,
    "1x2": ["alpha"] * 9,
}

# (row, col) per leaf, in the global sample order used below
_CHILD_LEAVES = [("0x0-0x0", 0, 0), ("0x0-1x0", 0, 1), ("0x0-0x1", 1, 0), ("0x0-1x1", 1, 1)]
_ROOT_LEAVES = [("1x0", 0, 1), ("0x1", 1, 0), ("1x1", 1, 1), ("0x2", 2, 0), ("1x2", 2, 1)]


def worked_example_tree(dim=3, seed=11):
    """Build the fixed two-level tree plus an aligned labeled matrix.

    Returns (tree, matrix). Matrix values are seeded noise around a
    distinct center per leaf, so per-cluster attribute means differ.
    """
    rng = np.random.default_rng(seed)

    sample_labels = []
    values_rows = []
    root_assign = []  # (global index, root row, root col)
    child_assign = []  # (global index, child row, child col)
    gidx = 0
    for k, (path, row, col) in enumerate(_CHILD_LEAVES + _ROOT_LEAVES):
        labels = WORKED_LEAF_LABELS[path]
        center = np.full(dim, float(k))
        for lab in labels:
            sample_labels.append(lab)
            values_rows.append(center + 0.1 * rng.normal(size=dim))
            if path.startswith("0x0-"):
                root_assign.append((gidx, 0, 0))
                child_assign.append((gidx, row, col))
            else:
                root_assign.append((gidx, row, col))
            gidx += 1

    n = gidx
    values = np.array(values_rows)
    matrix = DataMatrix(
        values=values,
        sample_ids=[f"s{i:04d}" for i in range(n)],
        attribute_names=[f"f{j}" for j in range(dim)],
        labels=sample_labels,
        label_name="cell_type",
    )

    def build(rows, cols, depth, path, assign):
        som = SomMap(
            rows=rows,
            cols=cols,
            weights=rng.normal(size=(rows, cols, dim)),
            parent_mqe=1.0,
            depth=depth,
            path=path,
            sample_indices=np.array([g for g, _, _ in assign], dtype=np.intp),
        )
        som.bmu_rows = np.array([r for _, r, _ in assign], dtype=np.intp)
        som.bmu_cols = np.array([c for _, _, c in assign], dtype=np.intp)
        som.unit_mqe = np.abs(rng.normal(size=(rows, cols)))
        return som

    root = build(3, 2, 1, "", root_assign)
    child = build(2, 2, 2, "0x0", child_assign)
    root.children[(0, 0)] = child

    w0 = values.mean(axis=0)
    mqe0 = float(np.linalg.norm(values - w0, axis=1).mean())
    tree = GhsomTree(
        w0=w0,
        mqe0=mqe0,
        root=root,
        params=GhsomParams(rng_seed=seed),
        sample_ids=list(matrix.sample_ids),
        attribute_names=list(matrix.attribute_names),
    )
    return tree, matrix


def majority_and_purity(labels):
    """Reference majority rule: most common label, ties to the smallest."""
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    label = min(lab for lab, c in counts.items() if c == best)
    return label, best / len(labels)
