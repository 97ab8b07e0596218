"""Growing hierarchical self-organizing map training.

A tree of small SOM grids is fitted top-down. Layer 0 is a single virtual
unit at the data mean whose quantization error sets the global scale. The
root 2x2 grid is trained as a plain SOM, then grown one row or column at a
time until its mean quantization error drops below ``tau1`` times the error
of the unit it refines. Units that still carry at least ``tau2`` times the
layer-0 error (and enough samples) are refined by child 2x2 grids, and the
whole cycle recurses.

Grid positions are written ``(row, col)`` internally; cluster path names
use the ``{col}x{row}`` convention, joined with ``-`` from layer 1 down,
e.g. ``0x0-2x1``.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import DataMatrix

log = logging.getLogger(__name__)

INIT_NOISE = 0.01
SIGMA_FLOOR = 0.5
# growth guards: a map never grows past 4 units per routed sample or 64
# insertions, whichever comes first (near-duplicate samples can otherwise
# keep the quantization error above any threshold forever)
MAX_UNITS_PER_SAMPLE = 4
MAX_INSERTIONS = 64


@dataclass(frozen=True)
class GhsomParams:
    """Growth thresholds and SOM training schedule.

    Parameters
    ----------
    tau1 : float in (0, 1]
        Horizontal breadth threshold; a map grows while its MQE is at
        least ``tau1`` times the quantization error it refines.
    tau2 : float in (0, 1]
        Hierarchical depth threshold; a unit spawns a child map while its
        mqe is at least ``tau2`` times the reference error.
    lam : int
        Training iterations (epochs over the routed samples) per growth
        check.
    alpha0 : float in (0, 1]
        Initial learning rate, decayed linearly to 0 over a growth cycle.
    sigma0 : float, optional
        Initial neighborhood radius. ``None`` uses half the larger grid
        dimension of the map being trained.
    max_depth : int
        Maximum hierarchy depth (root map is depth 1).
    rng_seed : int
        Seed for every random stream; child maps derive their streams
        from (seed, unit path), never from execution order.
    depth_reference : {"global", "parent"}
        What ``tau2`` multiplies: the layer-0 error (default) or the
        refined unit's own error.
    """

    tau1: float = 0.1
    tau2: float = 0.1
    lam: int = 100
    alpha0: float = 0.5
    sigma0: float | None = None
    max_depth: int = 10
    rng_seed: int = 0
    depth_reference: str = "global"

    def validate(self) -> None:
        if not 0 < self.tau1 <= 1:
            raise ValueError("tau1 must be in (0, 1]")
        if not 0 < self.tau2 <= 1:
            raise ValueError("tau2 must be in (0, 1]")
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if not 0 < self.alpha0 <= 1:
            raise ValueError("alpha0 must be in (0, 1]")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.depth_reference not in ("global", "parent"):
            raise ValueError("depth_reference must be 'global' or 'parent'")


@dataclass
class Unit:
    """View of one grid unit: weight, position, assignment and error."""

    row: int
    col: int
    weight: np.ndarray
    assigned: np.ndarray  # global sample indices
    mqe: float
    child: "SomMap | None"

    @property
    def name(self) -> str:
        return f"{self.col}x{self.row}"


class SomMap:
    """One SOM grid in the hierarchy.

    Holds the weight grid, the samples routed to it, their unit
    assignments, per-unit quantization errors and any child maps keyed
    by ``(row, col)``.
    """

    def __init__(self, rows, cols, weights, parent_mqe, depth, path, sample_indices):
        self.rows = rows
        self.cols = cols
        self.weights = weights  # (rows, cols, dim)
        self.parent_mqe = parent_mqe
        self.depth = depth
        self.path = path  # "" for the root, else e.g. "0x0-2x1"
        self.sample_indices = np.asarray(sample_indices, dtype=np.intp)
        self.bmu_rows = np.zeros(len(self.sample_indices), dtype=np.intp)
        self.bmu_cols = np.zeros(len(self.sample_indices), dtype=np.intp)
        self.unit_mqe = np.zeros((rows, cols))
        self.children: dict[tuple[int, int], SomMap] = {}

    @property
    def mqe(self) -> float:
        """Map MQE: mean of per-unit errors over non-empty units."""
        occupied = np.zeros((self.rows, self.cols), dtype=bool)
        occupied[self.bmu_rows, self.bmu_cols] = True
        u = int(occupied.sum())
        if u == 0:
            return 0.0
        return float(self.unit_mqe[occupied].sum() / u)

    def unit(self, row: int, col: int) -> Unit:
        mask = (self.bmu_rows == row) & (self.bmu_cols == col)
        return Unit(
            row=row,
            col=col,
            weight=self.weights[row, col],
            assigned=self.sample_indices[mask],
            mqe=float(self.unit_mqe[row, col]),
            child=self.children.get((row, col)),
        )

    def iter_units(self):
        for row in range(self.rows):
            for col in range(self.cols):
                yield self.unit(row, col)

    def unit_path(self, row: int, col: int) -> str:
        name = f"{col}x{row}"
        return f"{self.path}-{name}" if self.path else name


@dataclass
class GhsomTree:
    """Trained hierarchy plus the layer-0 statistics it grew from."""

    w0: np.ndarray
    mqe0: float
    root: SomMap
    params: GhsomParams
    sample_ids: list[str]
    attribute_names: list[str]

    def iter_maps(self):
        stack = [self.root]
        while stack:
            som = stack.pop()
            yield som
            stack.extend(som.children[key] for key in sorted(som.children))

    def iter_leaf_units(self):
        """Yield (path, Unit) for every unit without a child map."""
        for som in self.iter_maps():
            for unit in som.iter_units():
                if unit.child is None:
                    yield som.unit_path(unit.row, unit.col), unit

    def total_units(self) -> int:
        return sum(som.rows * som.cols for som in self.iter_maps())

    def depth(self) -> int:
        return max(som.depth for som in self.iter_maps())


@dataclass
class LeafPartition:
    """Flat assignment of every sample to exactly one leaf cluster."""

    sample_ids: list[str]
    clusters: list[str]
    _index: dict[str, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.sample_ids) != len(self.clusters):
            raise ValueError("sample_ids and clusters must be aligned")
        groups: dict[str, list[int]] = {}
        for i, c in enumerate(self.clusters):
            groups.setdefault(c, []).append(i)
        self._index = {c: np.array(ix, dtype=np.intp) for c, ix in groups.items()}

    def cluster_names(self) -> list[str]:
        return sorted(self._index)

    def members(self, cluster: str) -> np.ndarray:
        try:
            return self._index[cluster]
        except KeyError:
            raise KeyError(f"unknown cluster '{cluster}'") from None

    def sizes(self) -> dict[str, int]:
        return {c: len(ix) for c, ix in self._index.items()}

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)


def _rng(seed: int, path: str, stream: int) -> np.random.Generator:
    # stream 0 is weight init; 1 + epoch_base addresses each growth cycle
    entropy = [int(seed), int(stream), *path.encode("utf-8")]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def compute_layer0(m: DataMatrix) -> tuple[np.ndarray, float]:
    """Layer-0 statistics: data mean and its mean quantization error.

    The error is the average Euclidean distance from the mean vector to
    every sample.
    """
    if m.n_samples < 1:
        raise ValueError("empty matrix")
    w0 = m.values.mean(axis=0)
    mqe0 = float(np.linalg.norm(m.values - w0, axis=1).mean())
    return w0, mqe0


def best_matching_unit(som: SomMap, x: np.ndarray) -> tuple[int, int]:
    """Grid position (row, col) of the unit nearest ``x``.

    Ties break to the smallest (row, col) in row-major order.
    """
    flat = som.weights.reshape(-1, som.weights.shape[-1])
    d2 = ((flat - x) ** 2).sum(axis=1)
    best = int(np.argmin(d2))
    return divmod(best, som.cols)


def _grid_sq_distances(rows: int, cols: int) -> np.ndarray:
    """(units, units) matrix of squared grid distances, row-major."""
    r, c = np.divmod(np.arange(rows * cols), cols)
    return (r[:, None] - r[None, :]) ** 2 + (c[:, None] - c[None, :]) ** 2


def _assign(som: SomMap, data: np.ndarray) -> None:
    """Recompute BMU assignments and per-unit mqe for the routed samples."""
    x = data[som.sample_indices]
    flat = som.weights.reshape(-1, som.weights.shape[-1])
    d = cdist(x, flat)
    best = d.argmin(axis=1)
    som.bmu_rows, som.bmu_cols = np.divmod(best.astype(np.intp), som.cols)
    som.unit_mqe = np.zeros((som.rows, som.cols))
    for u in np.unique(best):
        row, col = divmod(int(u), som.cols)
        som.unit_mqe[row, col] = d[best == u, u].mean()


def train_map(
    som: SomMap,
    data: np.ndarray,
    params: GhsomParams,
    epoch_base: int = 0,
) -> SomMap:
    """Run one growth cycle of SOM training on the samples routed here.

    Performs ``lam`` epochs; each epoch presents every routed sample in a
    seeded-shuffle order and applies the sequential update
    ``w += alpha(t) * h(t) * (x - w)`` with a Gaussian neighborhood over
    grid distance. Both the learning rate and the neighborhood radius
    decay linearly over the cycle; the radius is floored at 0.5.
    Assignments and per-unit errors are recomputed afterwards.
    """
    n = len(som.sample_indices)
    if n == 0:
        raise ValueError("train_map needs at least one routed sample")
    x_local = data[som.sample_indices]
    dim = x_local.shape[1]
    n_units = som.rows * som.cols
    weights = som.weights.reshape(n_units, dim)
    grid_d2 = _grid_sq_distances(som.rows, som.cols)
    sigma0 = params.sigma0 if params.sigma0 is not None else max(som.rows, som.cols) / 2
    rng = _rng(params.rng_seed, som.path, 1 + epoch_base)

    total = params.lam * n
    t = 0
    for _ in range(params.lam):
        order = rng.permutation(n)
        for i in order:
            frac = 1.0 - t / total
            alpha = params.alpha0 * frac
            sigma = max(SIGMA_FLOOR, sigma0 * frac)
            x = x_local[i]
            diff = x - weights
            c = int(np.argmin((diff * diff).sum(axis=1)))
            h = np.exp(grid_d2[c] * (-0.5 / (sigma * sigma)))
            weights += (alpha * h)[:, None] * diff
            t += 1

    som.weights = weights.reshape(som.rows, som.cols, dim)
    _assign(som, data)
    return som


def _dissimilar_neighbor(som: SomMap, row: int, col: int) -> tuple[int, int]:
    """4-neighbor of (row, col) whose weight is farthest from it.

    Scan order (right, left, below, above) makes ties prefer a column
    insertion, then a row insertion.
    """
    w = som.weights[row, col]
    best = None
    best_d = -1.0
    for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        r, c = row + dr, col + dc
        if 0 <= r < som.rows and 0 <= c < som.cols:
            d = float(np.linalg.norm(som.weights[r, c] - w))
            if d > best_d:
                best_d = d
                best = (r, c)
    assert best is not None
    return best


def grow_horizontal(som: SomMap, data: np.ndarray) -> SomMap:
    """Insert one row or column between the error unit and its most
    dissimilar neighbor.

    The error unit is the one with the highest mqe (ties to the smallest
    (row, col)). A same-row neighbor triggers a column insertion, a
    same-column neighbor a row insertion; new weights are the means of
    the two flanking units.
    """
    flat_err = som.unit_mqe.reshape(-1)
    e_row, e_col = divmod(int(np.argmax(flat_err)), som.cols)
    d_row, d_col = _dissimilar_neighbor(som, e_row, e_col)

    if e_row == d_row:  # column insertion
        lo = min(e_col, d_col)
        new_col = 0.5 * (som.weights[:, lo, :] + som.weights[:, lo + 1, :])
        som.weights = np.insert(som.weights, lo + 1, new_col, axis=1)
        som.cols += 1
    else:  # row insertion
        lo = min(e_row, d_row)
        new_row = 0.5 * (som.weights[lo, :, :] + som.weights[lo + 1, :, :])
        som.weights = np.insert(som.weights, lo + 1, new_row, axis=0)
        som.rows += 1

    som.unit_mqe = np.zeros((som.rows, som.cols))
    return som


def _init_map(path, parent_mqe, depth, sample_indices, data, params) -> SomMap:
    """Fresh 2x2 map: weights at the routed-data mean plus small seeded
    noise scaled by the per-attribute spread."""
    x = data[sample_indices]
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    rng = _rng(params.rng_seed, path, 0)
    noise = rng.uniform(-INIT_NOISE, INIT_NOISE, size=(2, 2, x.shape[1]))
    weights = mean + noise * std
    return SomMap(2, 2, weights, parent_mqe, depth, path, sample_indices)


def _fit_map(som: SomMap, data: np.ndarray, params: GhsomParams) -> None:
    """Alternate training and row/column insertion until the map MQE
    drops below tau1 times the error it refines."""
    n = len(som.sample_indices)
    insertions = 0
    epoch_base = 0
    while True:
        train_map(som, data, params, epoch_base)
        epoch_base += params.lam
        mqe = som.mqe
        if mqe < params.tau1 * som.parent_mqe or mqe == 0.0:
            break
        if som.rows * som.cols >= MAX_UNITS_PER_SAMPLE * n or insertions >= MAX_INSERTIONS:
            log.warning(
                "map %s: growth capped at %dx%d with MQE %.6g >= tau1*parent %.6g",
                som.path or "<root>", som.rows, som.cols, mqe,
                params.tau1 * som.parent_mqe,
            )
            break
        grow_horizontal(som, data)
        insertions += 1


def expand_hierarchy(
    tree: GhsomTree,
    som: SomMap,
    data: np.ndarray,
    params: GhsomParams,
    executor: ThreadPoolExecutor | None = None,
) -> GhsomTree:
    """Spawn and fit child maps for every unit still above the depth
    threshold, then recurse.

    A unit expands when its mqe is at least ``tau2`` times the reference
    error (layer-0 by default), it holds at least 4 samples, and the
    depth budget allows. Sibling subtrees touch disjoint samples and may
    be fitted concurrently; the RNG streams are path-derived, so the
    result does not depend on scheduling.
    """
    if som.depth >= params.max_depth:
        return tree
    reference = tree.mqe0 if params.depth_reference == "global" else som.parent_mqe
    threshold = params.tau2 * reference

    pending = []
    for unit in som.iter_units():
        if unit.mqe >= threshold and unit.mqe > 0 and len(unit.assigned) >= 4:
            path = som.unit_path(unit.row, unit.col)
            child = _init_map(path, unit.mqe, som.depth + 1, unit.assigned, data, params)
            som.children[(unit.row, unit.col)] = child
            pending.append(child)

    def fit_subtree(child: SomMap) -> None:
        _fit_map(child, data, params)
        expand_hierarchy(tree, child, data, params)

    if executor is not None and len(pending) > 1:
        list(executor.map(fit_subtree, pending))
    else:
        for child in pending:
            fit_subtree(child)
    return tree


def run_ghsom(m: DataMatrix, params: GhsomParams, threads: int = 1) -> GhsomTree:
    """Fit the full hierarchy on a data matrix.

    Parameters
    ----------
    m : DataMatrix
        Input samples (at least 4).
    params : GhsomParams
        Growth thresholds and training schedule.
    threads : int
        Worker threads for fitting sibling subtrees of the root map.

    Returns
    -------
    GhsomTree
    """
    params.validate()
    if m.n_samples < 4:
        raise ValueError(f"need at least 4 samples, got {m.n_samples}")
    data = np.ascontiguousarray(m.values, dtype=np.float64)
    w0, mqe0 = compute_layer0(m)
    root = _init_map("", mqe0, 1, np.arange(m.n_samples), data, params)
    tree = GhsomTree(
        w0=w0,
        mqe0=mqe0,
        root=root,
        params=params,
        sample_ids=list(m.sample_ids),
        attribute_names=list(m.attribute_names),
    )
    _fit_map(root, data, params)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            expand_hierarchy(tree, root, data, params, executor)
    else:
        expand_hierarchy(tree, root, data, params)
    _check_refinement(tree)
    return tree


def _check_refinement(tree: GhsomTree) -> None:
    """Log (not fail) when a child map's MQE exceeds the unit it refines."""
    for som in tree.iter_maps():
        for (row, col), child in som.children.items():
            if child.mqe > som.unit_mqe[row, col] + 1e-9:
                log.warning(
                    "child map %s has MQE %.6g above its unit's mqe %.6g",
                    child.path, child.mqe, som.unit_mqe[row, col],
                )


def find_cluster(tree: GhsomTree, path: str) -> np.ndarray:
    """Global sample indices of a named cluster, leaf or internal.

    An internal cluster (a unit that grew a child map) owns every sample
    routed to its subtree, i.e. the union of its descendant leaves.
    """
    for som in tree.iter_maps():
        for unit in som.iter_units():
            if som.unit_path(unit.row, unit.col) == path:
                return unit.assigned
    valid = [som.unit_path(u.row, u.col) for som in tree.iter_maps() for u in som.iter_units()]
    raise KeyError(f"unknown cluster '{path}'; valid clusters: {', '.join(valid)}")


def leaf_partition(tree: GhsomTree) -> LeafPartition:
    """Flatten the tree: every sample labeled with its leaf unit's path."""
    clusters = [""] * len(tree.sample_ids)
    for path, unit in tree.iter_leaf_units():
        for i in unit.assigned:
            clusters[i] = path
    missing = [tree.sample_ids[i] for i, c in enumerate(clusters) if not c]
    if missing:
        raise RuntimeError(f"samples not reachable at any leaf: {missing[:5]}")
    return LeafPartition(sample_ids=list(tree.sample_ids), clusters=clusters)


# ---------------------------------------------------------------------------
# serialization

def _fmt(x: float) -> str:
    """17-significant-digit literal; round-trips any float64."""
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def _json_value(obj) -> str:
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_json_value(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}:{_json_value(v)}" for k, v in obj.items())
        return "{" + ",".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_stable(obj) -> str:
    """Serialize to JSON with insertion-ordered keys and 17-digit reals."""
    return _json_value(obj)


def _map_to_dict(tree: GhsomTree, som: SomMap) -> dict:
    units = []
    for unit in som.iter_units():
        units.append(
            {
                "row": unit.row,
                "col": unit.col,
                "weight": unit.weight,
                "mqe": unit.mqe,
                "assigned": [tree.sample_ids[i] for i in unit.assigned],
                "child": (
                    _map_to_dict(tree, unit.child) if unit.child is not None else None
                ),
            }
        )
    return {
        "rows": som.rows,
        "cols": som.cols,
        "depth": som.depth,
        "parent_mqe": som.parent_mqe,
        "units": units,
    }


def tree_to_dict(tree: GhsomTree) -> dict:
    p = tree.params
    return {
        "format": "ghsom-tree/1",
        "params": {
            "tau1": p.tau1,
            "tau2": p.tau2,
            "lam": p.lam,
            "alpha0": p.alpha0,
            "sigma0": p.sigma0,
            "max_depth": p.max_depth,
            "rng_seed": p.rng_seed,
            "depth_reference": p.depth_reference,
        },
        "sample_ids": tree.sample_ids,
        "attribute_names": tree.attribute_names,
        "w0": tree.w0,
        "mqe0": tree.mqe0,
        "root": _map_to_dict(tree, tree.root),
    }


def tree_to_json(tree: GhsomTree) -> str:
    return dumps_stable(tree_to_dict(tree))


def _map_from_dict(d: dict, path: str, depth: int, id_index: dict[str, int]) -> SomMap:
    rows, cols = d["rows"], d["cols"]
    dim = len(d["units"][0]["weight"])
    weights = np.zeros((rows, cols, dim))
    per_unit = {}
    for u in d["units"]:
        weights[u["row"], u["col"]] = u["weight"]
        per_unit[(u["row"], u["col"])] = u

    indices = []
    bmu_rows = []
    bmu_cols = []
    for (row, col), u in sorted(per_unit.items()):
        for sid in u["assigned"]:
            indices.append(id_index[sid])
            bmu_rows.append(row)
            bmu_cols.append(col)

    som = SomMap(rows, cols, weights, d["parent_mqe"], depth, path, indices)
    som.bmu_rows = np.array(bmu_rows, dtype=np.intp)
    som.bmu_cols = np.array(bmu_cols, dtype=np.intp)
    for (row, col), u in per_unit.items():
        som.unit_mqe[row, col] = u["mqe"]
        if u["child"] is not None:
            child_path = som.unit_path(row, col)
            som.children[(row, col)] = _map_from_dict(
                u["child"], child_path, depth + 1, id_index
            )
    return som


def tree_from_dict(d: dict) -> GhsomTree:
    if d.get("format") != "ghsom-tree/1":
        raise ValueError("not a ghsom tree document")
    params = GhsomParams(**d["params"])
    sample_ids = list(d["sample_ids"])
    id_index = {sid: i for i, sid in enumerate(sample_ids)}
    root = _map_from_dict(d["root"], "", 1, id_index)
    return GhsomTree(
        w0=np.asarray(d["w0"], dtype=np.float64),
        mqe0=float(d["mqe0"]),
        root=root,
        params=params,
        sample_ids=sample_ids,
        attribute_names=list(d["attribute_names"]),
    )


def tree_from_json(text: str) -> GhsomTree:
    return tree_from_dict(json.loads(text))
