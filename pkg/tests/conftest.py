import math

import numpy as np
import pytest

from gscg.color import ColorShare, LabColor
from gscg.graph import GSCG, Edge, MaterialPart, ObjectNode
from gscg.pointcloud import InstanceCloud, pca_geometry
from gscg.scene_io import CameraIntrinsics, SceneBundle


def make_bundle(h=60, w=80, f=100.0, n_instances=1, depth=2.0,
                materials=("unknown", "wood", "metal")) -> SceneBundle:
    """Small valid bundle: each instance is a solid square patch at constant depth."""
    rgb = np.full((h, w, 3), 128, dtype=np.uint8)
    depth_m = np.full((h, w), depth, dtype=np.float32)
    instance_map = np.zeros((h, w), dtype=np.int64)
    material_map = np.zeros((h, w), dtype=np.int64)
    semantic = {}
    side = min(h, w) // max(2 * n_instances, 2)
    for i in range(1, n_instances + 1):
        r0, c0 = 2 + (i - 1) * (side + 4), 2 + (i - 1) * (side + 4)
        instance_map[r0:r0 + side, c0:c0 + side] = i
        material_map[r0:r0 + side, c0:c0 + side] = 1 + (i % (len(materials) - 1))
        semantic[i] = f"thing{i}"
    cam = CameraIntrinsics(focal_length_px=f, principal_point=(w / 2, h / 2),
                           width=w, height=h)
    return SceneBundle(rgb=rgb, depth_m=depth_m, instance_map=instance_map,
                       semantic_of_instance=semantic, material_map=material_map,
                       material_vocab=tuple(materials), intrinsics=cam,
                       bundle_id="test-bundle")


@pytest.fixture
def small_bundle():
    return make_bundle()


def make_item(node_id: int, points: np.ndarray, label: str = "thing"):
    """(ObjectNode, InstanceCloud) pair straight from a point array."""
    points = np.asarray(points, dtype=np.float64)
    node = ObjectNode(
        id=node_id,
        label=label,
        geometry=pca_geometry(points),
        materials=(MaterialPart("wood", 1.0, (ColorShare("peru", LabColor(60.0, 15.0, 35.0), 1.0),)),),
        point_count=len(points),
    )
    cloud = InstanceCloud(instance_id=node_id, points=points,
                          source_pixels=np.zeros((len(points), 2), dtype=np.int64))
    return node, cloud


def random_scene_items(rng: np.random.Generator, max_objects=10, max_points=500,
                       spread=1.5):
    """Random blob clouds for edge-construction tests."""
    n = int(rng.integers(2, max_objects + 1))
    items = []
    for i in range(n):
        center = rng.uniform(-spread, spread, 3)
        npts = int(rng.integers(50, max_points + 1))
        pts = center + rng.normal(scale=rng.uniform(0.02, 0.3), size=(npts, 3))
        items.append(make_item(i + 1, pts, label=f"cls{i % 4}"))
    return items


def random_graph(rng: np.random.Generator, max_nodes=8) -> GSCG:
    """Random attributed graph for serialization tests."""
    n = int(rng.integers(0, max_nodes + 1))
    nodes = {}
    for i in range(1, n + 1):
        pts = rng.normal(size=(int(rng.integers(3, 40)), 3)) * rng.uniform(0.1, 2, 3)
        colors = []
        remaining = 1.0
        for k in range(int(rng.integers(1, 4))):
            frac = remaining if k == 2 else remaining * rng.uniform(0.3, 1.0)
            colors.append(ColorShare(
                name=str(rng.choice(["red", "peru", "teal", "gray"])),
                lab=LabColor(*rng.uniform(0, 100, 3)),
                fraction=frac,
            ))
            remaining -= frac
            if remaining <= 1e-9:
                break
        materials = tuple(
            MaterialPart(material=str(rng.choice(["wood", "metal", "fabric"])),
                         area_fraction=float(rng.uniform(0.1, 1.0)),
                         colors=tuple(colors))
            for _ in range(int(rng.integers(1, 4)))
        )
        nodes[i] = ObjectNode(
            id=i,
            label=None if rng.random() < 0.2 else str(rng.choice(["chair", "table", "mug"])),
            geometry=pca_geometry(pts),
            materials=materials,
            point_count=int(rng.integers(100, 5000)),
        )
    edges = []
    ids = sorted(nodes)
    seen = set()
    for _ in range(int(rng.integers(0, max(1, n * 2)))):
        if n < 2:
            break
        a, b = sorted(rng.choice(ids, size=2, replace=False).tolist())
        if (a, b) in seen:
            continue
        seen.add((a, b))
        kind = str(rng.choice(["touch", "near", "mixed"]))
        weight = float(rng.uniform(0.06, 1.0)) if kind == "touch" else float(rng.uniform(0.01, 1.8))
        edges.append(Edge(a, b, kind, weight))
    return GSCG(nodes=nodes, edges=edges, bundle_id=f"scene-{rng.integers(1e6)}",
                class_vocab=("chair", "table", "mug"))


def oracle_edges(items, touch_radius=0.05, touch_threshold=0.05, near_dist=1.0):
    """Independent all-pairs edge oracle built on scipy's cdist."""
    from scipy.spatial.distance import cdist

    if len(items) < 2:
        return []
    cents = [node.geometry.centroid for node, _ in items]
    pair_ids = [(i, j) for i in range(len(items)) for j in range(i + 1, len(items))]
    dists = [math.dist(cents[i], cents[j]) for i, j in pair_ids]
    dbar = sum(dists) / len(dists)
    edges = []
    for (i, j), d in zip(pair_ids, dists):
        node_i, cloud_i = items[i]
        node_j, cloud_j = items[j]
        dmat = cdist(cloud_i.points, cloud_j.points)
        frac_b = float((dmat.min(axis=0) <= touch_radius).mean())
        frac_a = float((dmat.min(axis=1) <= touch_radius).mean())
        touch_w = max(frac_b, frac_a)
        touching = touch_w > touch_threshold
        is_near = d <= near_dist
        near_w = math.exp(-d / dbar) if dbar > 0 else 1.0
        a, b = sorted((node_i.id, node_j.id))
        if touching and is_near:
            edges.append(Edge(a, b, "mixed", touch_w + near_w))
        elif touching:
            edges.append(Edge(a, b, "touch", touch_w))
        elif is_near:
            edges.append(Edge(a, b, "near", near_w))
    return edges
