"""Geo-semantic contextual graph: attributed nodes, spatial edges, JSON format.

The JSON document produced here is the contract between the pipeline, the
classifier, the describer, and the game server.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .color import ColorShare, LabColor, dominant_colors
from .pointcloud import (
    EROSION_KERNEL,
    GeometryAttributes,
    InstanceCloud,
    erode_mask,
    extract_instance_cloud,
    pca_geometry,
)
from .scene_io import SceneBundle

GRAPH_FORMAT_VERSION = 1
EDGE_KINDS = ("touch", "near", "mixed")

TOUCH_RADIUS_M = 0.05
TOUCH_THRESHOLD = 0.05
NEAR_DISTANCE_M = 1.0
MAX_MATERIALS_PER_NODE = 3


class GraphFormatError(Exception):
    """Raised for malformed graph documents, with a location in the message."""


@dataclass(frozen=True)
class MaterialPart:
    """One material of an object: area fraction plus its dominant colors."""

    material: str
    area_fraction: float
    colors: tuple[ColorShare, ...]


@dataclass(frozen=True)
class ObjectNode:
    id: int
    label: str | None
    geometry: GeometryAttributes
    materials: tuple[MaterialPart, ...]
    point_count: int


@dataclass(frozen=True)
class Edge:
    """Undirected spatial relation; a < b by construction."""

    a: int
    b: int
    kind: str
    weight: float

    def other(self, node_id: int) -> int:
        return self.b if node_id == self.a else self.a


@dataclass
class GSCG:
    nodes: dict[int, ObjectNode]
    edges: list[Edge]
    bundle_id: str = ""
    class_vocab: tuple[str, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# Node construction
# ---------------------------------------------------------------------------

def _material_parts(bundle: SceneBundle, eroded: np.ndarray) -> tuple[MaterialPart, ...]:
    vs, us = np.nonzero(eroded)
    mats = bundle.material_map[vs, us]
    total = len(mats)
    idx, counts = np.unique(mats, return_counts=True)
    order = np.lexsort((idx, -counts))[:MAX_MATERIALS_PER_NODE]
    parts = []
    for i in order:
        m = int(idx[i])
        sel = mats == m
        pixels = bundle.rgb[vs[sel], us[sel]]
        parts.append(MaterialPart(
            material=bundle.material_vocab[m],
            area_fraction=float(counts[i]) / total,
            colors=tuple(dominant_colors(pixels)),
        ))
    return tuple(parts)


def build_nodes(bundle: SceneBundle) -> list[tuple[ObjectNode, InstanceCloud]]:
    """One node per instance that survives cloud extraction.

    Material fractions and colors are measured over the eroded mask, the
    same pixel set the cloud was built from.
    """
    out = []
    for instance_id in sorted(int(i) for i in np.unique(bundle.instance_map) if i != 0):
        cloud = extract_instance_cloud(bundle, instance_id)
        if cloud is None:
            continue
        eroded = erode_mask(bundle.instance_map == instance_id, EROSION_KERNEL)
        node = ObjectNode(
            id=instance_id,
            label=bundle.semantic_of_instance[instance_id],
            geometry=pca_geometry(cloud),
            materials=_material_parts(bundle, eroded),
            point_count=cloud.points.shape[0],
        )
        out.append((node, cloud))
    return out


# ---------------------------------------------------------------------------
# Edges
# ---------------------------------------------------------------------------

def _within_radius_brute(query: np.ndarray, ref: np.ndarray, radius: float) -> np.ndarray:
    """Boolean per query point: any ref point within radius (inclusive)."""
    r2 = radius * radius
    hit = np.zeros(len(query), dtype=bool)
    # chunked O(N*M) search; exact, no approximations
    chunk = max(1, int(4e6) // max(len(ref), 1))
    for s in range(0, len(query), chunk):
        block = query[s:s + chunk]
        d2 = ((block[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2)
        hit[s:s + chunk] = (d2 <= r2).any(axis=1)
    return hit


def _within_radius_grid(query: np.ndarray, ref: np.ndarray, radius: float) -> np.ndarray:
    """Grid-hash accelerated variant; produces identical results to brute force."""
    r2 = radius * radius
    cells: dict[tuple[int, int, int], list[int]] = {}
    keys = np.floor(ref / radius).astype(np.int64)
    for i, k in enumerate(map(tuple, keys)):
        cells.setdefault(k, []).append(i)
    hit = np.zeros(len(query), dtype=bool)
    qkeys = np.floor(query / radius).astype(np.int64)
    for qi in range(len(query)):
        kx, ky, kz = qkeys[qi]
        found = False
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    bucket = cells.get((kx + dx, ky + dy, kz + dz))
                    if not bucket:
                        continue
                    d2 = ((ref[bucket] - query[qi]) ** 2).sum(axis=1)
                    if (d2 <= r2).any():
                        found = True
                        break
                if found:
                    break
            if found:
                break
        hit[qi] = found
    return hit


def touch_fraction(cloud_a: InstanceCloud | np.ndarray, cloud_b: InstanceCloud | np.ndarray,
                   radius: float = TOUCH_RADIUS_M, method: str = "brute") -> tuple[float, float]:
    """Fractions of each cloud's points within radius of the other cloud.

    Returns (fraction of B near A, fraction of A near B). Exact counts over
    point totals; `method="grid"` opts into the hash accelerator, which is
    tested to agree with brute force exactly.
    """
    a = cloud_a.points if isinstance(cloud_a, InstanceCloud) else np.asarray(cloud_a, float)
    b = cloud_b.points if isinstance(cloud_b, InstanceCloud) else np.asarray(cloud_b, float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("touch_fraction requires non-empty clouds")
    within = _within_radius_grid if method == "grid" else _within_radius_brute
    frac_b_near_a = within(b, a, radius).sum() / len(b)
    frac_a_near_b = within(a, b, radius).sum() / len(a)
    return float(frac_b_near_a), float(frac_a_near_b)


def build_edges(nodes_with_clouds, touch_radius: float = TOUCH_RADIUS_M,
                touch_threshold: float = TOUCH_THRESHOLD,
                near_dist: float = NEAR_DISTANCE_M,
                method: str = "brute") -> list[Edge]:
    """Touch / near / mixed edges over every unordered node pair.

    touch: max of the two directed point fractions, kept if strictly above
    the threshold. near: centroid distance d <= near_dist (inclusive), with
    weight e^(-d / dbar) where dbar is the mean centroid distance over all
    pairs in the scene. Both conditions together give kind "mixed" with the
    weights summed.
    """
    items = list(nodes_with_clouds)
    if len(items) < 2:
        return []
    centroids = [node.geometry.centroid for node, _ in items]
    dists = {}
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            dists[(i, j)] = float(np.linalg.norm(centroids[i] - centroids[j]))
    dbar = sum(dists.values()) / len(dists)

    edges = []
    for (i, j), d in dists.items():
        node_i, cloud_i = items[i]
        node_j, cloud_j = items[j]
        fb, fa = touch_fraction(cloud_i, cloud_j, touch_radius, method=method)
        touch_w = max(fb, fa)
        touching = touch_w > touch_threshold
        near = d <= near_dist
        near_w = math.exp(-d / dbar) if dbar > 0 else 1.0
        a, b = sorted((node_i.id, node_j.id))
        if touching and near:
            edges.append(Edge(a, b, "mixed", touch_w + near_w))
        elif touching:
            edges.append(Edge(a, b, "touch", touch_w))
        elif near:
            edges.append(Edge(a, b, "near", near_w))
    return edges


def build_graph(bundle: SceneBundle, method: str = "brute") -> GSCG:
    """Full pipeline for one bundle: nodes, edges, scene metadata."""
    pairs = build_nodes(bundle)
    edges = build_edges(pairs, method=method)
    vocab = tuple(sorted(set(bundle.semantic_of_instance.values())))
    return GSCG(
        nodes={node.id: node for node, _ in pairs},
        edges=edges,
        bundle_id=bundle.bundle_id,
        class_vocab=vocab,
    )


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def neighbors(graph: GSCG, node_id: int) -> list[tuple[ObjectNode, Edge]]:
    """Direct neighbors of a node with the connecting edge, ordered by id."""
    if node_id not in graph.nodes:
        raise KeyError(f"unknown node id {node_id}")
    out = []
    for e in graph.edges:
        if node_id in (e.a, e.b):
            out.append((graph.nodes[e.other(node_id)], e))
    out.sort(key=lambda pair: pair[0].id)
    return out


def label_histogram(graph: GSCG, exclude: int) -> dict[str, int]:
    """Counts of semantic labels over all nodes except `exclude` and
    nodes without a label."""
    if exclude not in graph.nodes:
        raise KeyError(f"unknown node id {exclude}")
    hist: dict[str, int] = {}
    for node in graph.nodes.values():
        if node.id == exclude or node.label is None:
            continue
        hist[node.label] = hist.get(node.label, 0) + 1
    return hist


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _node_to_dict(n: ObjectNode) -> dict:
    return {
        "id": n.id,
        "label": n.label,
        "centroid": [float(v) for v in n.geometry.centroid],
        "size": [float(v) for v in n.geometry.size],
        "orientation": [float(v) for v in n.geometry.orientation.reshape(-1)],  # row-major
        "materials": [
            {
                "label": p.material,
                "fraction": p.area_fraction,
                "colors": [
                    {"name": c.name, "lab": [c.lab.L, c.lab.a, c.lab.b], "fraction": c.fraction}
                    for c in p.colors
                ],
            }
            for p in n.materials
        ],
        "point_count": n.point_count,
    }


def serialize(graph: GSCG) -> str:
    """Stable, diffable JSON: sorted node ids, sorted edge endpoints."""
    doc = {
        "format_version": GRAPH_FORMAT_VERSION,
        "meta": {
            "bundle_id": graph.bundle_id,
            "class_vocab": list(graph.class_vocab),
        },
        "nodes": [_node_to_dict(graph.nodes[i]) for i in sorted(graph.nodes)],
        "edges": [[e.a, e.b, e.kind, e.weight]
                  for e in sorted(graph.edges, key=lambda e: (e.a, e.b))],
    }
    return json.dumps(doc, indent=1)


def _node_from_dict(d: dict, where: str) -> ObjectNode:
    try:
        geometry = GeometryAttributes(
            size=np.array(d["size"], dtype=np.float64),
            orientation=np.array(d["orientation"], dtype=np.float64).reshape(3, 3),
            centroid=np.array(d["centroid"], dtype=np.float64),
        )
        materials = tuple(
            MaterialPart(
                material=p["label"],
                area_fraction=float(p["fraction"]),
                colors=tuple(
                    ColorShare(name=c["name"], lab=LabColor(*c["lab"]),
                               fraction=float(c["fraction"]))
                    for c in p["colors"]
                ),
            )
            for p in d["materials"]
        )
        return ObjectNode(id=int(d["id"]), label=d["label"], geometry=geometry,
                          materials=materials, point_count=int(d["point_count"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"{where}: {exc}") from exc


def deserialize(text: str) -> GSCG:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise GraphFormatError("document must be an object with 'nodes' and 'edges'")
    nodes: dict[int, ObjectNode] = {}
    for i, nd in enumerate(doc["nodes"]):
        node = _node_from_dict(nd, f"nodes[{i}]")
        if node.id in nodes:
            raise GraphFormatError(f"nodes[{i}]: duplicate node id {node.id}")
        nodes[node.id] = node
    edges = []
    for i, ed in enumerate(doc["edges"]):
        try:
            a, b, kind, weight = ed
        except (TypeError, ValueError) as exc:
            raise GraphFormatError(f"edges[{i}]: expected [a, b, kind, weight]") from exc
        for end in (a, b):
            if end not in nodes:
                raise GraphFormatError(f"edges[{i}]: references missing node {end}")
        if kind not in EDGE_KINDS:
            raise GraphFormatError(f"edges[{i}]: unknown kind {kind!r}")
        edges.append(Edge(int(a), int(b), kind, float(weight)))
    meta = doc.get("meta", {})
    return GSCG(nodes=nodes, edges=edges, bundle_id=meta.get("bundle_id", ""),
                class_vocab=tuple(meta.get("class_vocab", ())))


def graphs_equal(g1: GSCG, g2: GSCG) -> bool:
    """Exact structural equality on every field (bit-exact floats)."""
    if set(g1.nodes) != set(g2.nodes) or g1.bundle_id != g2.bundle_id:
        return False
    if g1.class_vocab != g2.class_vocab:
        return False
    for i, n1 in g1.nodes.items():
        n2 = g2.nodes[i]
        if (n1.label, n1.point_count, n1.materials) != (n2.label, n2.point_count, n2.materials):
            return False
        if not (np.array_equal(n1.geometry.size, n2.geometry.size)
                and np.array_equal(n1.geometry.orientation, n2.geometry.orientation)
                and np.array_equal(n1.geometry.centroid, n2.geometry.centroid)):
            return False
    return sorted(g1.edges, key=lambda e: (e.a, e.b)) == sorted(g2.edges, key=lambda e: (e.a, e.b))


def load_graph(path) -> GSCG:
    with open(path) as f:
        return deserialize(f.read())


def save_graph(graph: GSCG, path) -> None:
    with open(path, "w") as f:
        f.write(serialize(graph))
        f.write("\n")
