"""Significant-attribute identification for leaf clusters.

For a target cluster, each attribute gets two spreads: ``sigma_i``, the
population standard deviation of the attribute inside the cluster, and
``sigma_b``, the spread of the attribute's per-cluster means around the
target cluster's mean,

    sigma_b = sqrt( sum over other clusters (m_c - m_c')^2 / (|C| - 1) ).

Attributes with large ``diff = sigma_b - sigma_i`` are coherent inside
the cluster yet displaced from everywhere else; the top-k ranking of
diff is the cluster's significant-attribute list.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .ghsom import LeafPartition


@dataclass(frozen=True)
class AttributeScore:
    cluster: str
    attribute: str
    sigma_i: float
    sigma_b: float
    diff: float
    rank: int


def _check_aligned(partition: LeafPartition, m: DataMatrix) -> None:
    if partition.sample_ids != m.sample_ids:
        raise ValueError("partition and data matrix list different sample ids")


def _cluster_means(partition: LeafPartition, m: DataMatrix) -> dict[str, np.ndarray]:
    return {
        c: m.values[partition.members(c)].mean(axis=0)
        for c in partition.cluster_names()
    }


def sigma_within(
    partition: LeafPartition, m: DataMatrix, cluster: str, attribute: str
) -> float:
    """Population standard deviation of one attribute inside one cluster."""
    _check_aligned(partition, m)
    g = m.attribute_index(attribute)
    rows = partition.members(cluster)
    return float(m.values[rows, g].std())


def sigma_between(
    partition: LeafPartition, m: DataMatrix, cluster: str, attribute: str
) -> float:
    """Spread of an attribute's cluster means around the target cluster.

    Sums squared differences between the target cluster's mean and every
    other cluster's mean, normalized by the number of other clusters.
    """
    _check_aligned(partition, m)
    g = m.attribute_index(attribute)
    names = partition.cluster_names()
    if cluster not in names:
        raise KeyError(f"unknown cluster '{cluster}'")
    if len(names) < 2:
        raise ValueError("sigma_between needs at least 2 clusters")
    m_target = float(m.values[partition.members(cluster), g].mean())
    acc = 0.0
    for other in names:
        if other == cluster:
            continue
        m_other = float(m.values[partition.members(other), g].mean())
        acc += (m_target - m_other) ** 2
    return float(np.sqrt(acc / (len(names) - 1)))


def identify_significant(
    partition: LeafPartition,
    m: DataMatrix,
    cluster: str,
    k: int | None = None,
) -> list[AttributeScore]:
    """Rank attributes of a cluster by diff = sigma_b - sigma_i.

    Returns the top ``k`` (default: 10, reduced when fewer attributes
    exist) sorted by descending diff, ties broken by attribute name;
    ranks start at 1. Explicit ``k`` above the attribute count is an
    error.
    """
    _check_aligned(partition, m)
    names = partition.cluster_names()
    if cluster not in names:
        raise KeyError(f"unknown cluster '{cluster}'")
    if len(names) < 2:
        raise ValueError("significant-attribute ranking needs at least 2 clusters")
    if k is None:
        k = min(10, m.n_attributes)
    if not 1 <= k <= m.n_attributes:
        raise ValueError(f"k must be in [1, {m.n_attributes}], got {k}")

    rows = partition.members(cluster)
    sigma_i = m.values[rows].std(axis=0)

    by_cluster = _cluster_means(partition, m)
    means = np.vstack([by_cluster[c] for c in names])
    target = names.index(cluster)
    # the self term is zero, so summing over all clusters equals the
    # sum over the others; only the normalizer excludes the target
    sq = ((means - means[target]) ** 2).sum(axis=0)
    sigma_b = np.sqrt(sq / (len(names) - 1))
    diff = sigma_b - sigma_i

    order = sorted(range(m.n_attributes), key=lambda g: (-diff[g], m.attribute_names[g]))
    return [
        AttributeScore(
            cluster=cluster,
            attribute=m.attribute_names[g],
            sigma_i=float(sigma_i[g]),
            sigma_b=float(sigma_b[g]),
            diff=float(diff[g]),
            rank=rank,
        )
        for rank, g in enumerate(order[:k], start=1)
    ]


def significance_difference_feature(
    partition: LeafPartition,
    m: DataMatrix,
    target_cluster: str,
    k: int | None = None,
) -> dict[str, float]:
    """Distance of every cluster to the target over its significant attributes.

    Computes the target cluster's top-k attribute list, then for each
    leaf cluster returns the Euclidean distance between its mean vector
    and the target's, restricted to those attributes. The target itself
    maps to 0.
    """
    scores = identify_significant(partition, m, target_cluster, k)
    cols = np.array([m.attribute_index(s.attribute) for s in scores], dtype=np.intp)
    means = _cluster_means(partition, m)
    t = means[target_cluster][cols]
    return {
        c: float(np.linalg.norm(means[c][cols] - t))
        for c in partition.cluster_names()
    }


def save_scores_csv(scores: list[AttributeScore], path) -> None:
    """Write scores as CSV: cluster, rank, attribute, sigma_i, sigma_b, diff."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster", "rank", "attribute", "sigma_i", "sigma_b", "diff"])
        for s in scores:
            writer.writerow(
                [s.cluster, s.rank, s.attribute, repr(s.sigma_i), repr(s.sigma_b), repr(s.diff)]
            )
