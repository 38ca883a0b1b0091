"""Scene bundle I/O and pinhole back-projection.

A scene bundle is a directory of aligned rasters plus a JSON sidecar:

    rgb.png        8-bit RGB image
    depth.pfm      grayscale PFM, metric depth in meters
    instances.png  16-bit grayscale PNG of instance ids (0 = no instance)
    materials.png  8-bit grayscale PNG of material indices
    meta.json      focal_length_px, optional principal_point,
                   semantic_of_instance map, material_vocab, format_version
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

FORMAT_VERSION = 1


class BundleError(Exception):
    """Raised when a scene bundle is missing files or violates invariants."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera: focal length in pixels, principal point, image size.

    Convention: +x right, +y down, +z into the scene (image-aligned).
    """

    focal_length_px: float
    principal_point: tuple[float, float]
    width: int
    height: int

    def __post_init__(self):
        if self.focal_length_px <= 0:
            raise BundleError(f"focal_length_px must be > 0, got {self.focal_length_px}")
        cx, cy = self.principal_point
        if not (0 <= cx <= self.width and 0 <= cy <= self.height):
            raise BundleError(
                f"principal point ({cx}, {cy}) outside image {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class SceneBundle:
    """Aligned per-pixel scene perception plus camera intrinsics.

    All rasters share the same H x W. Immutable after load; safe to share
    across workers.
    """

    rgb: np.ndarray                      # H x W x 3, uint8
    depth_m: np.ndarray                  # H x W, float32/float64 meters
    instance_map: np.ndarray             # H x W, non-negative int (0 = none)
    semantic_of_instance: dict[int, str]
    material_map: np.ndarray             # H x W, material indices
    material_vocab: tuple[str, ...]
    intrinsics: CameraIntrinsics
    bundle_id: str = field(default="", compare=False)

    def __post_init__(self):
        validate_bundle(self)


def validate_bundle(b: SceneBundle) -> None:
    h, w = b.depth_m.shape
    if b.rgb.shape != (h, w, 3):
        raise BundleError(f"rgb shape {b.rgb.shape} does not match depth {h}x{w}")
    for name, arr in (("instances", b.instance_map), ("materials", b.material_map)):
        if arr.shape != (h, w):
            raise BundleError(f"{name} shape {arr.shape} does not match depth {h}x{w}")
    if (b.intrinsics.width, b.intrinsics.height) != (w, h):
        raise BundleError(
            f"intrinsics size {b.intrinsics.width}x{b.intrinsics.height} "
            f"does not match rasters {w}x{h}"
        )
    ids = np.unique(b.instance_map)
    for i in ids:
        if i != 0 and int(i) not in b.semantic_of_instance:
            raise BundleError(f"instance id {int(i)} has no entry in semantic_of_instance")
    max_mat = int(b.material_map.max()) if b.material_map.size else 0
    if max_mat >= len(b.material_vocab):
        where = np.argwhere(b.material_map == max_mat)[0]
        raise BundleError(
            f"material index {max_mat} at pixel (u={where[1]}, v={where[0]}) "
            f"exceeds vocab of {len(b.material_vocab)}"
        )
    masked = b.instance_map != 0
    bad = masked & ~(np.isfinite(b.depth_m) & (b.depth_m > 0))
    if bad.any():
        v, u = np.argwhere(bad)[0]
        raise BundleError(
            f"non-positive or non-finite depth under instance mask at (u={u}, v={v})"
        )


# ---------------------------------------------------------------------------
# PFM (portable float map) — minimal grayscale reader/writer.
# Negative scale in the header means little-endian; rows are stored bottom-up.
# ---------------------------------------------------------------------------

def read_pfm(path: Path | str) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header not in (b"Pf", b"PF"):
            raise BundleError(f"{path}: not a PFM file (header {header!r})")
        channels = 3 if header == b"PF" else 1
        dims = f.readline().split()
        if len(dims) != 2:
            raise BundleError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = w * h * channels
        data = np.frombuffer(f.read(count * 4), dtype=f"{endian}f4", count=count)
        if data.size != count:
            raise BundleError(f"{path}: truncated PFM payload")
    img = data.reshape((h, w, channels) if channels == 3 else (h, w))
    return np.ascontiguousarray(img[::-1])  # bottom-up storage -> top-down array


def write_pfm(path: Path | str, data: np.ndarray) -> None:
    if data.ndim != 2:
        raise ValueError("only grayscale PFM supported")
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")  # little-endian
        f.write(np.ascontiguousarray(data[::-1], dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# Bundle directory load/save
# ---------------------------------------------------------------------------

_FILES = ("rgb.png", "depth.pfm", "instances.png", "materials.png", "meta.json")


def load_bundle(path: Path | str) -> SceneBundle:
    """Load and validate a scene bundle directory."""
    root = Path(path)
    for name in _FILES:
        if not (root / name).is_file():
            raise BundleError(f"missing bundle file: {root / name}")
    with open(root / "meta.json") as f:
        meta = json.load(f)
    rgb = np.asarray(Image.open(root / "rgb.png").convert("RGB"), dtype=np.uint8)
    depth = read_pfm(root / "depth.pfm").astype(np.float32)
    instances = np.asarray(Image.open(root / "instances.png"), dtype=np.int64)
    materials = np.asarray(Image.open(root / "materials.png"), dtype=np.int64)
    h, w = depth.shape
    pp = meta.get("principal_point")
    cam = CameraIntrinsics(
        focal_length_px=float(meta["focal_length_px"]),
        principal_point=tuple(pp) if pp is not None else (w / 2.0, h / 2.0),
        width=w,
        height=h,
    )
    semantic = {int(k): str(v) for k, v in meta["semantic_of_instance"].items()}
    return SceneBundle(
        rgb=rgb,
        depth_m=depth,
        instance_map=instances,
        semantic_of_instance=semantic,
        material_map=materials,
        material_vocab=tuple(meta["material_vocab"]),
        intrinsics=cam,
        bundle_id=str(meta.get("bundle_id", root.name)),
    )


def write_bundle(bundle: SceneBundle, path: Path | str) -> None:
    """Inverse of load_bundle; raster payloads round-trip bit-exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    Image.fromarray(bundle.rgb, mode="RGB").save(root / "rgb.png")
    write_pfm(root / "depth.pfm", bundle.depth_m)
    inst = bundle.instance_map
    if inst.max() > np.iinfo(np.uint16).max:
        raise BundleError(f"instance id {int(inst.max())} exceeds 16-bit PNG range")
    Image.fromarray(inst.astype(np.uint16)).save(root / "instances.png")
    if bundle.material_map.max() > np.iinfo(np.uint8).max:
        raise BundleError("material index exceeds 8-bit PNG range")
    Image.fromarray(bundle.material_map.astype(np.uint8), mode="L").save(root / "materials.png")
    meta = {
        "format_version": FORMAT_VERSION,
        "bundle_id": bundle.bundle_id,
        "focal_length_px": bundle.intrinsics.focal_length_px,
        "principal_point": list(bundle.intrinsics.principal_point),
        "semantic_of_instance": {str(k): v for k, v in sorted(bundle.semantic_of_instance.items())},
        "material_vocab": list(bundle.material_vocab),
    }
    with open(root / "meta.json", "w") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


# ---------------------------------------------------------------------------
# Pinhole geometry
# ---------------------------------------------------------------------------

def back_project(pixel: tuple[float, float], depth: float, cam: CameraIntrinsics):
    """Map a pixel plus metric depth to a 3D point (x, y, z) in meters.

    x = (u - cx) * z / f,  y = (v - cy) * z / f,  z = depth.
    """
    if depth <= 0:
        raise ValueError(f"depth must be > 0, got {depth}")
    u, v = pixel
    cx, cy = cam.principal_point
    f = cam.focal_length_px
    return ((u - cx) * depth / f, (v - cy) * depth / f, float(depth))


def project(point, cam: CameraIntrinsics) -> tuple[float, float]:
    """Inverse of back_project: u = x*f/z + cx, v = y*f/z + cy."""
    x, y, z = point
    cx, cy = cam.principal_point
    return (x * cam.focal_length_px / z + cx, y * cam.focal_length_px / z + cy)


def back_project_pixels(us: np.ndarray, vs: np.ndarray, depths: np.ndarray,
                        cam: CameraIntrinsics) -> np.ndarray:
    """Vectorized back-projection -> N x 3 array of points in meters."""
    cx, cy = cam.principal_point
    f = cam.focal_length_px
    z = np.asarray(depths, dtype=np.float64)
    x = (np.asarray(us, dtype=np.float64) - cx) * z / f
    y = (np.asarray(vs, dtype=np.float64) - cy) * z / f
    return np.stack([x, y, z], axis=-1)


def build_dense_cloud(bundle: SceneBundle):
    """Back-project every pixel with finite positive depth.

    Returns (pixels N x 2 int (u, v), points N x 3 float, skipped count).
    Pixels with zero/NaN/negative depth are skipped, not errored: real depth
    estimators emit holes.
    """
    h, w = bundle.depth_m.shape
    valid = np.isfinite(bundle.depth_m) & (bundle.depth_m > 0)
    vs, us = np.nonzero(valid)
    points = back_project_pixels(us, vs, bundle.depth_m[vs, us], bundle.intrinsics)
    skipped = h * w - len(us)
    return np.stack([us, vs], axis=1), points, skipped
