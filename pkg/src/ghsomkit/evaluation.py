"""Cluster validity scores and threshold-grid sweeps.

Internal quality uses the Calinski-Harabasz ratio of between- to
within-cluster dispersion; external quality (when reference labels
exist) uses the Adjusted Rand Index. ``sweep`` runs the clustering once
per (tau1, tau2) cell and collects both scores plus tree shape, which is
how the thresholds get picked in practice.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import comb
from typing import Sequence

import numpy as np

from .data import DataMatrix
from .ghsom import GhsomParams, LeafPartition, dumps_stable, leaf_partition, run_ghsom

log = logging.getLogger(__name__)


def ch_index(partition: LeafPartition, m: DataMatrix) -> float:
    """Calinski-Harabasz index of a flat partition.

    CH = [sum_k n_k ||c_k - c||^2 / (K-1)] / [sum_k sum_i ||d_i - c_k||^2 / (N-K)]

    with c_k the cluster centroids and c the global centroid. Zero
    within-cluster scatter with separated centroids returns +inf; zero
    scatter on both sides returns 0.0. K < 2 or N <= K is an error.
    """
    if partition.sample_ids != m.sample_ids:
        raise ValueError("partition and data matrix list different sample ids")
    names = partition.cluster_names()
    k = len(names)
    n = m.n_samples
    if k < 2:
        raise ValueError(f"ch_index needs at least 2 clusters, got {k}")
    if n <= k:
        raise ValueError(f"ch_index needs more samples than clusters (n={n}, K={k})")
    center = m.values.mean(axis=0)
    bgss = 0.0
    wgss = 0.0
    for c in names:
        rows = m.values[partition.members(c)]
        centroid = rows.mean(axis=0)
        bgss += len(rows) * float(((centroid - center) ** 2).sum())
        wgss += float(((rows - centroid) ** 2).sum())
    if wgss == 0.0:
        return float("inf") if bgss > 0.0 else 0.0
    return (bgss / (k - 1)) / (wgss / (n - k))


def adjusted_rand_index(pred: Sequence, truth: Sequence) -> float:
    """ARI between two label sequences, from the contingency table.

    With n_ij the contingency counts, a_i / b_j the marginals and
    pairs(x) = C(x, 2):

        ARI = (sum_ij pairs(n_ij) - E) / (max - E)
        E   = sum_i pairs(a_i) * sum_j pairs(b_j) / pairs(n)
        max = (sum_i pairs(a_i) + sum_j pairs(b_j)) / 2

    A zero denominator (both sides degenerate, e.g. one big cluster vs.
    all singletons) yields 0.0 with a warning.
    """
    if len(pred) != len(truth):
        raise ValueError(
            f"label sequences differ in length: {len(pred)} vs {len(truth)}"
        )
    n = len(pred)
    if n < 2:
        raise ValueError("ARI needs at least 2 samples")
    pred_codes = {}
    truth_codes = {}
    table: dict[tuple[int, int], int] = {}
    for p, t in zip(pred, truth):
        i = pred_codes.setdefault(p, len(pred_codes))
        j = truth_codes.setdefault(t, len(truth_codes))
        table[(i, j)] = table.get((i, j), 0) + 1
    a = np.zeros(len(pred_codes), dtype=np.int64)
    b = np.zeros(len(truth_codes), dtype=np.int64)
    sum_ij = 0
    for (i, j), cnt in table.items():
        a[i] += cnt
        b[j] += cnt
        sum_ij += comb(cnt, 2)
    sum_a = sum(comb(int(x), 2) for x in a)
    sum_b = sum(comb(int(x), 2) for x in b)
    expected = sum_a * sum_b / comb(n, 2)
    maximum = (sum_a + sum_b) / 2
    if maximum == expected:
        log.warning("ARI denominator is 0 (degenerate marginals); returning 0.0")
        return 0.0
    return (sum_ij - expected) / (maximum - expected)


def ari(partition: LeafPartition, labels: Sequence) -> float:
    """ARI of a leaf partition against reference labels."""
    if len(labels) != partition.n_samples:
        raise ValueError(
            f"labels length {len(labels)} != {partition.n_samples} samples"
        )
    return adjusted_rand_index(partition.clusters, list(labels))


@dataclass
class SweepCell:
    tau1: float
    tau2: float
    ch: float | None = None
    ari: float | None = None
    leaf_count: int | None = None
    depth: int | None = None
    total_units: int | None = None
    error: str | None = None


@dataclass
class SweepGrid:
    """Full Cartesian product of threshold values with per-cell metrics."""

    tau1_values: list[float]
    tau2_values: list[float]
    cells: dict[tuple[float, float], SweepCell]

    def cell(self, tau1: float, tau2: float) -> SweepCell:
        return self.cells[(tau1, tau2)]

    def best_by(self, metric: str) -> SweepCell | None:
        """Cell with the highest finite value of ``metric`` (NaN/err skipped)."""
        best = None
        for t1 in self.tau1_values:
            for t2 in self.tau2_values:
                cell = self.cells[(t1, t2)]
                v = getattr(cell, metric)
                if v is None or (isinstance(v, float) and np.isnan(v)):
                    continue
                if best is None or v > getattr(best, metric):
                    best = cell
        return best


def _sweep_cell(
    m: DataMatrix,
    params: GhsomParams,
    tau1: float,
    tau2: float,
    labels: Sequence | None,
    threads: int,
) -> SweepCell:
    cell = SweepCell(tau1=tau1, tau2=tau2)
    try:
        tree = run_ghsom(m, replace(params, tau1=tau1, tau2=tau2), threads=threads)
        part = leaf_partition(tree)
        cell.leaf_count = len(part.cluster_names())
        cell.depth = tree.depth()
        cell.total_units = tree.total_units()
        try:
            cell.ch = ch_index(part, m)
        except ValueError:
            cell.ch = float("nan")  # single-leaf partitions have no CH
        if labels is not None:
            cell.ari = ari(part, labels)
    except Exception as exc:  # noqa: BLE001 - per-cell isolation is the contract
        log.warning("sweep cell (tau1=%g, tau2=%g) failed: %s", tau1, tau2, exc)
        cell.error = str(exc)
    return cell


def sweep(
    m: DataMatrix,
    params_base: GhsomParams,
    tau1_values: Sequence[float],
    tau2_values: Sequence[float],
    labels: Sequence | None = None,
    threads: int = 1,
) -> SweepGrid:
    """Run the clusterer over every (tau1, tau2) pair and score each cell.

    All cells share ``params_base`` (including the seed), so each cell is
    individually reproducible. A failing cell records its error message
    and the sweep continues.
    """
    if not tau1_values or not tau2_values:
        raise ValueError("tau1_values and tau2_values must be non-empty")
    t1s = sorted({float(v) for v in tau1_values}, reverse=True)
    t2s = sorted({float(v) for v in tau2_values}, reverse=True)
    pairs = [(t1, t2) for t1 in t1s for t2 in t2s]

    def work(pair):
        t1, t2 = pair
        return _sweep_cell(m, params_base, t1, t2, labels, threads=1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(p) for p in pairs]
    cells = {(c.tau1, c.tau2): c for c in results}
    return SweepGrid(tau1_values=t1s, tau2_values=t2s, cells=cells)


def sweep_to_csv(grid: SweepGrid, path) -> None:
    """Cell table: tau1, tau2, ch, ari, leaf_count, depth, total_units, error."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["tau1", "tau2", "ch", "ari", "leaf_count", "depth", "total_units", "error"]
        )
        for t1 in grid.tau1_values:
            for t2 in grid.tau2_values:
                c = grid.cells[(t1, t2)]
                writer.writerow(
                    [
                        repr(c.tau1),
                        repr(c.tau2),
                        "" if c.ch is None else repr(c.ch),
                        "" if c.ari is None else repr(c.ari),
                        "" if c.leaf_count is None else c.leaf_count,
                        "" if c.depth is None else c.depth,
                        "" if c.total_units is None else c.total_units,
                        c.error or "",
                    ]
                )


def sweep_summary(grid: SweepGrid) -> dict:
    """Best cell per metric, JSON-ready."""

    def cell_dict(c: SweepCell | None):
        if c is None:
            return None
        return {
            "tau1": c.tau1,
            "tau2": c.tau2,
            "ch": c.ch,
            "ari": c.ari,
            "leaf_count": c.leaf_count,
            "depth": c.depth,
            "total_units": c.total_units,
        }

    return {
        "tau1_values": grid.tau1_values,
        "tau2_values": grid.tau2_values,
        "n_cells": len(grid.cells),
        "n_failed": sum(1 for c in grid.cells.values() if c.error),
        "best_by_ch": cell_dict(grid.best_by("ch")),
        "best_by_ari": cell_dict(grid.best_by("ari")),
    }


def save_sweep_summary(grid: SweepGrid, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_stable(sweep_summary(grid)))
        fh.write("\n")
