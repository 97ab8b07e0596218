"""Cluster a synthetic nested-blob dataset and render the result.

Generates coarse blobs with sub-structure, grows a hierarchical map on
them, reports recovery quality (ARI against the generating labels, CH
index of the leaf partition) and writes the tree, the partition and both
SVG views into --out-dir.

Run from the repository root:

    python3 scripts/blob_demo.py --out-dir /tmp/blob_run
"""

import argparse
from pathlib import Path

from ghsomkit import (
    FeatureSpec,
    GhsomParams,
    ari,
    ch_index,
    leaf_partition,
    nested_blobs,
    render_distribution_map,
    render_feature_map,
    run_ghsom,
    tree_to_json,
)


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", type=Path, default=Path("blob_run"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau1", type=float, default=0.2)
    p.add_argument("--tau2", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=int, default=10)
    return p.parse_args()


def main():
    args = parse_args()
    m = nested_blobs(seed=args.seed)
    params = GhsomParams(
        tau1=args.tau1, tau2=args.tau2, lam=args.lam, rng_seed=args.seed
    )
    tree = run_ghsom(m, params)
    part = leaf_partition(tree)

    print(f"data: {m.n_samples} samples x {m.n_attributes} attributes")
    print(f"tree: depth {tree.depth()}, {tree.total_units()} units, "
          f"{len(part.cluster_names())} leaves")
    print(f"ARI vs generating labels: {ari(part, m.labels):.4f}")
    print(f"CH index of leaf partition: {ch_index(part, m):.2f}")
    print()
    print(f"{'leaf':<12} {'n':>4}  label mix")
    for name in part.cluster_names():
        rows = part.members(name)
        counts = {}
        for r in rows:
            counts[m.labels[r]] = counts.get(m.labels[r], 0) + 1
        mix = ", ".join(f"{k}:{v}" for k, v in sorted(counts.items()))
        print(f"{name:<12} {len(rows):>4}  {mix}")

    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "tree.json").write_text(tree_to_json(tree) + "\n")
    svg, _ = render_feature_map(tree, part, m, FeatureSpec(kind="mean"))
    (args.out_dir / "feature_map.svg").write_text(svg)
    svg, _ = render_distribution_map(tree, part, m, FeatureSpec(kind="label"))
    (args.out_dir / "distribution_map.svg").write_text(svg)
    print(f"\nwrote tree.json, feature_map.svg, distribution_map.svg -> {args.out_dir}")


if __name__ == "__main__":
    main()
