"""Static SVG views of a trained hierarchy.

Two renderers, both pure functions returning ``(svg_text, geometry)``:

* cluster feature map — nested squarified treemap; every unit becomes a
  rectangle inside its parent's rectangle with area proportional to its
  sample count, filled by a per-cluster feature value.
* cluster distribution map — one circle per leaf cluster placed at its
  grid-derived unit-square coordinates, sized by sqrt(count), colored by
  feature or majority label (opacity = label purity).

Leaf coordinates follow the recursive grid subdivision: a map at level i
splits its cell into rows_i x cols_i, so cell width/height are
w_i = w_{i-1}/cols_i and h_i = h_{i-1}/rows_i (starting from the unit
square), and a leaf's center is the accumulated offset plus half its own
cell. Exact rational arithmetic keeps the geometry free of rounding
artifacts.

The geometry dict mirrors everything the SVG shows (bounds, centers,
radii, feature values) so tests and downstream tooling never have to
parse SVG.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .data import DataMatrix
from .ghsom import GhsomTree, LeafPartition, SomMap, _fmt
from .sai import identify_significant

log = logging.getLogger(__name__)

PLOT_SIZE = 600
MARGIN = 10
LEGEND_WIDTH = 170

# categorical palette (10 distinct hues, assigned to sorted labels)
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]

FEATURE_KINDS = ("mean", "median", "attribute", "significance", "label")


@dataclass(frozen=True)
class LeafCoordinate:
    """Center and cell size of one leaf cluster in the unit square."""

    cluster: str
    px: Fraction
    py: Fraction
    w_l: Fraction
    h_l: Fraction


@dataclass(frozen=True)
class FeatureSpec:
    """What to color clusters by.

    kind:
      - "mean": mean of all attribute values over the cluster's samples
      - "median": median of all attribute values over the cluster's samples
      - "attribute": mean of one named attribute (requires ``attribute``)
      - "significance": distance to ``target_cluster`` over its top-k
        significant attributes (requires ``target_cluster``)
      - "label": majority sample label, drawn with opacity = purity
        (requires labels on the data matrix)

    Continuous kinds are mapped linearly onto low_color..high_color over
    the [min, max] of the rendered values.
    """

    kind: str
    attribute: str | None = None
    target_cluster: str | None = None
    k: int | None = None
    low_color: str = "#d62728"
    high_color: str = "#1f77b4"

    def validate(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind '{self.kind}'; use one of {FEATURE_KINDS}")
        if self.kind == "attribute" and not self.attribute:
            raise ValueError("feature kind 'attribute' requires an attribute name")
        if self.kind == "significance" and not self.target_cluster:
            raise ValueError("feature kind 'significance' requires a target cluster")


def leaf_coordinates(tree: GhsomTree) -> list[LeafCoordinate]:
    """Exact unit-square centers for every leaf unit, in tree order."""
    out: list[LeafCoordinate] = []

    def walk(som: SomMap, x_acc: Fraction, y_acc: Fraction, w_prev: Fraction, h_prev: Fraction):
        w_i = w_prev / som.cols
        h_i = h_prev / som.rows
        for row in range(som.rows):
            for col in range(som.cols):
                x = x_acc + w_i * col
                y = y_acc + h_i * row
                child = som.children.get((row, col))
                if child is None:
                    out.append(
                        LeafCoordinate(
                            cluster=som.unit_path(row, col),
                            px=x + w_i / 2,
                            py=y + h_i / 2,
                            w_l=w_i,
                            h_l=h_i,
                        )
                    )
                else:
                    walk(child, x, y, w_i, h_i)

    walk(tree.root, Fraction(0), Fraction(0), Fraction(1), Fraction(1))
    return out


# ---------------------------------------------------------------------------
# squarified treemap layout

def _worst_aspect(row_areas: list[float], side: float) -> float:
    total = sum(row_areas)
    thickness = total / side
    worst = 1.0
    for a in row_areas:
        length = a / thickness
        worst = max(worst, thickness / length, length / thickness)
    return worst


def squarify(areas: list[float], rect: tuple[float, float, float, float]):
    """Tile ``rect`` with one sub-rectangle per area, preserving order.

    Areas are scaled to fill the rect exactly; rows are laid along the
    shorter side of the remaining space, and a row is closed as soon as
    adding the next item would worsen its worst aspect ratio. Returns
    rects aligned with ``areas``.
    """
    x, y, w, h = rect
    if not areas:
        return []
    if min(areas) <= 0:
        raise ValueError("squarify needs positive areas")
    scale = (w * h) / sum(areas)
    scaled = [a * scale for a in areas]
    rects: list[tuple[float, float, float, float]] = []

    def close_row(row: list[float]):
        nonlocal x, y, w, h
        total = sum(row)
        if w >= h:  # vertical strip on the left
            thickness = total / h
            cy = y
            for a in row:
                rects.append((x, cy, thickness, a / thickness))
                cy += a / thickness
            x += thickness
            w -= thickness
        else:  # horizontal strip on top
            thickness = total / w
            cx = x
            for a in row:
                rects.append((cx, y, a / thickness, thickness))
                cx += a / thickness
            y += thickness

    row: list[float] = []
    for a in scaled:
        side = min(w, h)
        if row and _worst_aspect(row + [a], side) > _worst_aspect(row, side):
            close_row(row)
            row = []
        row.append(a)
    close_row(row)
    return rects


# ---------------------------------------------------------------------------
# colors and SVG helpers

def _parse_hex(color: str) -> tuple[int, int, int]:
    c = color.lstrip("#")
    if len(c) != 6:
        raise ValueError(f"expected #rrggbb color, got '{color}'")
    return int(c[0:2], 16), int(c[2:4], 16), int(c[4:6], 16)


def _lerp_color(low: str, high: str, t: float) -> str:
    t = min(1.0, max(0.0, t))
    lo, hi = _parse_hex(low), _parse_hex(high)
    rgb = tuple(round(a + (b - a) * t) for a, b in zip(lo, hi))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _n(x: float) -> str:
    """Compact fixed-precision number for SVG coordinates."""
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _svg_open(width: float, height: float) -> list[str]:
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_n(width)}" height="{_n(height)}" '
        f'viewBox="0 0 {_n(width)} {_n(height)}">',
        f'<rect x="0" y="0" width="{_n(width)}" height="{_n(height)}" fill="#ffffff"/>',
    ]


def _continuous_legend(parts: list[str], x: float, y: float, h: float,
                       vmin: float, vmax: float, spec: FeatureSpec, title: str):
    parts.append(
        '<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">'
        f'<stop offset="0" stop-color="{spec.low_color}"/>'
        f'<stop offset="1" stop-color="{spec.high_color}"/>'
        "</linearGradient></defs>"
    )
    parts.append(f'<text x="{_n(x)}" y="{_n(y - 8)}" font-size="12" '
                 f'font-family="sans-serif">{_esc(title)}</text>')
    parts.append(f'<rect x="{_n(x)}" y="{_n(y)}" width="18" height="{_n(h)}" '
                 'fill="url(#scale)" stroke="#333333" stroke-width="0.5"/>')
    parts.append(f'<text x="{_n(x + 24)}" y="{_n(y + 10)}" font-size="11" '
                 f'font-family="sans-serif">{_fmt_tick(vmax)}</text>')
    parts.append(f'<text x="{_n(x + 24)}" y="{_n(y + h)}" font-size="11" '
                 f'font-family="sans-serif">{_fmt_tick(vmin)}</text>')


def _categorical_legend(parts: list[str], x: float, y: float,
                        color_of: dict[str, str], title: str):
    parts.append(f'<text x="{_n(x)}" y="{_n(y - 8)}" font-size="12" '
                 f'font-family="sans-serif">{_esc(title)}</text>')
    for i, (label, color) in enumerate(color_of.items()):
        cy = y + 18 * i
        parts.append(f'<rect x="{_n(x)}" y="{_n(cy)}" width="12" height="12" '
                     f'fill="{color}" stroke="#333333" stroke-width="0.5"/>')
        parts.append(f'<text x="{_n(x + 18)}" y="{_n(cy + 10)}" font-size="11" '
                     f'font-family="sans-serif">{_esc(label)}</text>')


def _fmt_tick(v: float) -> str:
    return f"{v:.4g}"


# ---------------------------------------------------------------------------
# feature values

class _FeatureComputer:
    """Per-cluster feature values for one render pass."""

    def __init__(self, partition: LeafPartition, m: DataMatrix, spec: FeatureSpec):
        spec.validate()
        self.m = m
        self.spec = spec
        self.partition = partition
        if spec.kind == "attribute":
            self.col = m.attribute_index(spec.attribute)
        elif spec.kind == "significance":
            scores = identify_significant(partition, m, spec.target_cluster, spec.k)
            cols = [m.attribute_index(s.attribute) for s in scores]
            self.cols = np.array(cols, dtype=np.intp)
            target_rows = partition.members(spec.target_cluster)
            # same indexing route as value(): np.ix_ yields a different
            # memory layout, hence different summation rounding, and the
            # target cluster would then miss exact zero
            self.target_mean = m.values[target_rows][:, self.cols].mean(axis=0)
        elif spec.kind == "label":
            if m.labels is None:
                raise ValueError("feature kind 'label' requires labels on the data matrix")
            self.labels = np.array(m.labels, dtype=object)

    def value(self, indices: np.ndarray) -> float:
        sub = self.m.values[indices]
        if self.spec.kind == "mean":
            return float(sub.mean())
        if self.spec.kind == "median":
            return float(np.median(sub))
        if self.spec.kind == "attribute":
            return float(sub[:, self.col].mean())
        if self.spec.kind == "significance":
            return float(np.linalg.norm(sub[:, self.cols].mean(axis=0) - self.target_mean))
        raise AssertionError(self.spec.kind)

    def majority(self, indices: np.ndarray) -> tuple[str, float]:
        """(majority label, purity); label ties break alphabetically."""
        counts = Counter(self.labels[indices])
        top = max(counts.values())
        label = min(l for l, c in counts.items() if c == top)
        return str(label), top / len(indices)


# ---------------------------------------------------------------------------
# renderers

def render_feature_map(
    tree: GhsomTree,
    partition: LeafPartition,
    m: DataMatrix,
    spec: FeatureSpec,
    drill_depth: int | None = None,
) -> tuple[str, dict]:
    """Nested treemap of the hierarchy; see module docstring.

    Returns the SVG text and a geometry dict listing every rendered
    rectangle with its path, bounds, count, and feature value.
    """
    if drill_depth is not None and drill_depth < 1:
        raise ValueError("drill_depth must be >= 1")
    feature = _FeatureComputer(partition, m, spec)
    plot = (float(MARGIN), float(MARGIN), float(PLOT_SIZE), float(PLOT_SIZE))
    nodes: list[dict] = []

    def place(som: SomMap, rect, depth: int):
        units = []
        for unit in som.iter_units():
            path = som.unit_path(unit.row, unit.col)
            if len(unit.assigned) == 0:
                log.warning("feature map: dropping empty cluster %s", path)
                continue
            units.append((unit, path))
        units.sort(key=lambda up: (-len(up[0].assigned), up[1]))
        rects = squarify([float(len(u.assigned)) for u, _ in units], rect)
        for (unit, path), r in zip(units, rects):
            drill = unit.child is not None and (drill_depth is None or depth < drill_depth)
            node = {
                "path": path,
                "depth": depth,
                "x": r[0], "y": r[1], "width": r[2], "height": r[3],
                "count": len(unit.assigned),
                "leaf": not drill,
            }
            if spec.kind == "label":
                label, purity = feature.majority(unit.assigned)
                node["label"] = label
                node["purity"] = purity
            else:
                node["value"] = feature.value(unit.assigned)
            nodes.append(node)
            if drill:
                place(unit.child, r, depth + 1)

    place(tree.root, plot, 1)

    width = MARGIN + PLOT_SIZE + MARGIN + LEGEND_WIDTH + MARGIN
    height = MARGIN + PLOT_SIZE + MARGIN
    parts = _svg_open(width, height)

    if spec.kind == "label":
        labels = sorted({n["label"] for n in nodes})
        color_of = {l: PALETTE[i % len(PALETTE)] for i, l in enumerate(labels)}
        fills = [(color_of[n["label"]], n["purity"]) for n in nodes]
    else:
        values = [n["value"] for n in nodes]
        vmin, vmax = (min(values), max(values)) if values else (0.0, 0.0)
        span = vmax - vmin
        fills = [
            (_lerp_color(spec.low_color, spec.high_color,
                         0.5 if span == 0 else (n["value"] - vmin) / span), 1.0)
            for n in nodes
        ]

    for node, (color, opacity) in zip(nodes, fills):
        stroke = max(0.5, 3.0 - node["depth"])
        parts.append(
            f'<rect x="{_n(node["x"])}" y="{_n(node["y"])}" '
            f'width="{_n(node["width"])}" height="{_n(node["height"])}" '
            f'fill="{color}" fill-opacity="{_fmt(opacity)}" '
            f'stroke="#222222" stroke-width="{_n(stroke)}"/>'
        )
    for node in nodes:
        if node["leaf"]:
            cx = node["x"] + node["width"] / 2
            cy = node["y"] + node["height"] / 2
            parts.append(
                f'<text x="{_n(cx)}" y="{_n(cy)}" font-size="10" '
                'font-family="sans-serif" text-anchor="middle" '
                f'fill="#111111">{_esc(node["path"])}</text>'
            )

    legend_x = MARGIN + PLOT_SIZE + MARGIN
    if spec.kind == "label":
        _categorical_legend(parts, legend_x, 40.0, color_of, "majority label")
    else:
        _continuous_legend(parts, legend_x, 40.0, 200.0, vmin, vmax, spec,
                           _feature_title(spec))
    parts.append("</svg>")

    geometry = {
        "map": "feature",
        "feature": _spec_dict(spec),
        "canvas": {"width": width, "height": height},
        "plot": {"x": plot[0], "y": plot[1], "width": plot[2], "height": plot[3]},
        "drill_depth": drill_depth,
        "nodes": nodes,
    }
    return "\n".join(parts) + "\n", geometry


def render_distribution_map(
    tree: GhsomTree,
    partition: LeafPartition,
    m: DataMatrix,
    spec: FeatureSpec,
) -> tuple[str, dict]:
    """Bubble chart of leaf clusters at their unit-square coordinates.

    Circle area tracks sample count. Label specs color by majority label
    with opacity = purity; continuous specs use the two-pole scale.
    Returns (svg, geometry) like render_feature_map.
    """
    feature = _FeatureComputer(partition, m, spec)
    coords = leaf_coordinates(tree)
    sizes = partition.sizes()

    nodes: list[dict] = []
    for coord in coords:
        count = sizes.get(coord.cluster, 0)
        if count == 0:
            log.warning("distribution map: dropping empty cluster %s", coord.cluster)
            continue
        indices = partition.members(coord.cluster)
        node = {
            "path": coord.cluster,
            "px": float(coord.px),
            "py": float(coord.py),
            "count": count,
        }
        if spec.kind == "label":
            label, purity = feature.majority(indices)
            node["label"] = label
            node["opacity"] = purity
        else:
            node["value"] = feature.value(indices)
            node["opacity"] = 1.0
        nodes.append(node)

    max_count = max((n["count"] for n in nodes), default=1)
    r_max = 0.07 * PLOT_SIZE
    for n in nodes:
        n["cx"] = MARGIN + n["px"] * PLOT_SIZE
        n["cy"] = MARGIN + n["py"] * PLOT_SIZE
        n["radius"] = r_max * float(np.sqrt(n["count"] / max_count))

    if spec.kind == "label":
        labels = sorted({n["label"] for n in nodes})
        color_of = {l: PALETTE[i % len(PALETTE)] for i, l in enumerate(labels)}
        for n in nodes:
            n["color"] = color_of[n["label"]]
    else:
        values = [n["value"] for n in nodes]
        vmin, vmax = (min(values), max(values)) if values else (0.0, 0.0)
        span = vmax - vmin
        for n in nodes:
            t = 0.5 if span == 0 else (n["value"] - vmin) / span
            n["color"] = _lerp_color(spec.low_color, spec.high_color, t)

    width = MARGIN + PLOT_SIZE + MARGIN + LEGEND_WIDTH + MARGIN
    height = MARGIN + PLOT_SIZE + MARGIN
    parts = _svg_open(width, height)
    parts.append(
        f'<rect x="{_n(MARGIN)}" y="{_n(MARGIN)}" width="{_n(PLOT_SIZE)}" '
        f'height="{_n(PLOT_SIZE)}" fill="none" stroke="#999999" stroke-width="1"/>'
    )
    for n in nodes:
        parts.append(
            f'<circle cx="{_n(n["cx"])}" cy="{_n(n["cy"])}" r="{_n(n["radius"])}" '
            f'fill="{n["color"]}" fill-opacity="{_fmt(n["opacity"])}" '
            f'stroke="#222222" stroke-width="0.8">'
            f"<title>{_esc(n['path'])}</title></circle>"
        )

    legend_x = MARGIN + PLOT_SIZE + MARGIN
    if spec.kind == "label":
        _categorical_legend(parts, legend_x, 40.0, color_of, "majority label")
    else:
        _continuous_legend(parts, legend_x, 40.0, 200.0, vmin, vmax, spec,
                           _feature_title(spec))
    parts.append("</svg>")

    geometry = {
        "map": "distribution",
        "feature": _spec_dict(spec),
        "canvas": {"width": width, "height": height},
        "plot": {"x": float(MARGIN), "y": float(MARGIN),
                 "width": float(PLOT_SIZE), "height": float(PLOT_SIZE)},
        "nodes": nodes,
    }
    return "\n".join(parts) + "\n", geometry


def _feature_title(spec: FeatureSpec) -> str:
    if spec.kind == "attribute":
        return spec.attribute
    if spec.kind == "significance":
        return f"distance to {spec.target_cluster}"
    return spec.kind


def _spec_dict(spec: FeatureSpec) -> dict:
    return {
        "kind": spec.kind,
        "attribute": spec.attribute,
        "target_cluster": spec.target_cluster,
        "k": spec.k,
        "low_color": spec.low_color,
        "high_color": spec.high_color,
    }
