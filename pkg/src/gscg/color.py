"""Dominant named colors: sRGB -> CIELAB, k-means, CIEDE2000 merge, CSS4 naming."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

import numpy as np

KMEANS_K = 20
KMEANS_SEED = 42
MERGE_THRESHOLD = 15.0
_MAX_KMEANS_ITER = 100

# D65 reference white, 2 degree observer
_WHITE = np.array([0.95047, 1.0, 1.08883])
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])


class LabColor(NamedTuple):
    L: float
    a: float
    b: float


@dataclass(frozen=True)
class ColorShare:
    """A named color and the fraction of pixels it covers."""

    name: str
    lab: LabColor
    fraction: float


def rgb_to_lab(rgb) -> LabColor | np.ndarray:
    """Convert 8-bit sRGB to CIELAB (D65). Accepts a triple or an N x 3 array."""
    arr = np.asarray(rgb, dtype=np.float64)
    single = arr.ndim == 1
    c = np.atleast_2d(arr) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T / _WHITE
    eps, kappa = 0.008856, 903.3
    f = np.where(xyz > eps, np.cbrt(xyz), (kappa * xyz + 16.0) / 116.0)
    lab = np.stack([
        116.0 * f[:, 1] - 16.0,
        500.0 * (f[:, 0] - f[:, 1]),
        200.0 * (f[:, 1] - f[:, 2]),
    ], axis=1)
    if single:
        return LabColor(*lab[0])
    return lab


def ciede2000(lab1, lab2, kL: float = 1.0, kC: float = 1.0, kH: float = 1.0):
    """CIE 2000 color difference. Broadcasts over leading dimensions.

    Not a metric: symmetry holds but the triangle inequality does not.
    """
    p = np.asarray(lab1, dtype=np.float64)
    q = np.asarray(lab2, dtype=np.float64)
    scalar = p.ndim == 1 and q.ndim == 1
    L1, a1, b1 = np.moveaxis(np.atleast_2d(p), -1, 0)
    L2, a2, b2 = np.moveaxis(np.atleast_2d(q), -1, 0)

    C1 = np.hypot(a1, b1)
    C2 = np.hypot(a2, b2)
    Cbar7 = ((C1 + C2) / 2.0) ** 7
    G = 0.5 * (1.0 - np.sqrt(Cbar7 / (Cbar7 + 25.0 ** 7)))
    a1p = (1.0 + G) * a1
    a2p = (1.0 + G) * a2
    C1p = np.hypot(a1p, b1)
    C2p = np.hypot(a2p, b2)
    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0

    dLp = L2 - L1
    dCp = C2p - C1p
    hprod = C1p * C2p
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, dh)
    dh = np.where(dh < -180.0, dh + 360.0, dh)
    dh = np.where(hprod == 0.0, 0.0, dh)
    dHp = 2.0 * np.sqrt(hprod) * np.sin(np.radians(dh) / 2.0)

    Lbp = (L1 + L2) / 2.0
    Cbp = (C1p + C2p) / 2.0
    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbp = np.where(
        habs <= 180.0,
        hsum / 2.0,
        np.where(hsum < 360.0, (hsum + 360.0) / 2.0, (hsum - 360.0) / 2.0),
    )
    hbp = np.where(hprod == 0.0, hsum, hbp)

    T = (1.0
         - 0.17 * np.cos(np.radians(hbp - 30.0))
         + 0.24 * np.cos(np.radians(2.0 * hbp))
         + 0.32 * np.cos(np.radians(3.0 * hbp + 6.0))
         - 0.20 * np.cos(np.radians(4.0 * hbp - 63.0)))
    dtheta = 30.0 * np.exp(-(((hbp - 275.0) / 25.0) ** 2))
    Cbp7 = Cbp ** 7
    RC = 2.0 * np.sqrt(Cbp7 / (Cbp7 + 25.0 ** 7))
    SL = 1.0 + 0.015 * (Lbp - 50.0) ** 2 / np.sqrt(20.0 + (Lbp - 50.0) ** 2)
    SC = 1.0 + 0.045 * Cbp
    SH = 1.0 + 0.015 * Cbp * T
    RT = -np.sin(np.radians(2.0 * dtheta)) * RC

    tL = dLp / (kL * SL)
    tC = dCp / (kC * SC)
    tH = dHp / (kH * SH)
    dE = np.sqrt(tL ** 2 + tC ** 2 + tH ** 2 + RT * tC * tH)
    return float(dE[0]) if scalar else dE


# ---------------------------------------------------------------------------
# Palette
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Palette:
    """Ordered named colors; order is the tie-break for nearest lookups."""

    names: tuple[str, ...]
    rgb: np.ndarray  # N x 3 uint8
    lab: np.ndarray  # N x 3

    def __len__(self) -> int:
        return len(self.names)


@lru_cache(maxsize=1)
def css4_palette() -> Palette:
    """The 148 CSS4 named colors, alphabetical, from the shipped data file."""
    names: list[str] = []
    rgbs: list[tuple[int, int, int]] = []
    text = resources.files("gscg").joinpath("data/css4_colors.txt").read_text()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, hexval = line.split()
        h = hexval.lstrip("#")
        names.append(name)
        rgbs.append(tuple(int(h[i:i + 2], 16) for i in (0, 2, 4)))
    rgb = np.array(rgbs, dtype=np.uint8)
    return Palette(names=tuple(names), rgb=rgb, lab=rgb_to_lab(rgb))


def name_color(lab, palette: Palette | None = None, metric: str = "ciede2000") -> str:
    """Nearest palette name; ties break by palette order.

    metric: "ciede2000" (default, same perceptual metric as cluster merging)
    or "euclidean" for plain LAB distance.
    """
    palette = palette or css4_palette()
    target = np.asarray(lab, dtype=np.float64)
    if metric == "ciede2000":
        d = ciede2000(np.broadcast_to(target, palette.lab.shape), palette.lab)
    elif metric == "euclidean":
        d = np.linalg.norm(palette.lab - target, axis=1)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return palette.names[int(np.argmin(d))]


# ---------------------------------------------------------------------------
# k-means in LAB space
# ---------------------------------------------------------------------------

def _sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)


def kmeans_lab(pixels, k: int = KMEANS_K, seed: int = KMEANS_SEED):
    """Weighted Lloyd k-means with k-means++ seeding on LAB pixels.

    Returns [(LabColor center, pixel count), ...] for nonempty clusters.
    Fewer distinct colors than k short-circuits to one cluster per color.
    Deterministic for a fixed seed.
    """
    labs = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if labs.shape[0] == 0:
        raise ValueError("no pixels to cluster")
    uniq, counts = np.unique(labs, axis=0, return_counts=True)
    if len(uniq) < k:
        return [(LabColor(*c), int(n)) for c, n in zip(uniq, counts)]

    rng = np.random.default_rng(seed)
    weights = counts.astype(np.float64)

    # k-means++ over distinct colors, D^2 weighted by pixel counts
    centers = np.empty((k, 3))
    first = rng.choice(len(uniq), p=weights / weights.sum())
    centers[0] = uniq[first]
    d2 = ((uniq - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        probs = weights * d2
        total = probs.sum()
        if total <= 0:
            idx = int(np.argmax(d2))
        else:
            idx = rng.choice(len(uniq), p=probs / total)
        centers[i] = uniq[idx]
        d2 = np.minimum(d2, ((uniq - centers[i]) ** 2).sum(axis=1))

    assign = np.full(len(uniq), -1)
    for _ in range(_MAX_KMEANS_ITER):
        dist = _sq_dist(uniq, centers)
        new_assign = dist.argmin(axis=1)
        # re-seed empty clusters at the point farthest from its center
        for c in range(k):
            if not (new_assign == c).any():
                far = int(np.argmax(dist[np.arange(len(uniq)), new_assign]))
                centers[c] = uniq[far]
                dist[:, c] = ((uniq - centers[c]) ** 2).sum(axis=1)
                new_assign = dist.argmin(axis=1)
        if (new_assign == assign).all():
            break
        assign = new_assign
        for c in range(k):
            sel = assign == c
            w = weights[sel]
            centers[c] = (uniq[sel] * w[:, None]).sum(axis=0) / w.sum()

    out = []
    for c in range(k):
        sel = assign == c
        if sel.any():
            out.append((LabColor(*centers[c]), int(counts[sel].sum())))
    return out


def merge_clusters(clusters, threshold: float = MERGE_THRESHOLD):
    """Iteratively merge the globally closest pair with dE00 below threshold.

    The merged center is the mass-weighted LAB mean and replaces the
    lower-indexed member, so the result does not depend on input order
    except through exact distance ties. Total mass is conserved.
    """
    centers = [np.array(c, dtype=np.float64) for c, _ in clusters]
    masses = [float(m) for _, m in clusters]
    while len(centers) > 1:
        stacked = np.array(centers)
        d = ciede2000(stacked[:, None, :], stacked[None, :, :])
        iu = np.triu_indices(len(centers), k=1)
        pair_d = d[iu]
        best = int(np.argmin(pair_d))
        if pair_d[best] >= threshold:
            break
        i, j = int(iu[0][best]), int(iu[1][best])
        mi, mj = masses[i], masses[j]
        centers[i] = (centers[i] * mi + centers[j] * mj) / (mi + mj)
        masses[i] = mi + mj
        del centers[j], masses[j]
    return [(LabColor(*c), m) for c, m in zip(centers, masses)]


def dominant_colors(pixels, k: int = KMEANS_K, seed: int = KMEANS_SEED,
                    merge_threshold: float = MERGE_THRESHOLD,
                    palette: Palette | None = None) -> list[ColorShare]:
    """Full pipeline: k-means in LAB, CIEDE2000 merge, CSS4 naming.

    pixels: N x 3 8-bit sRGB. Clusters that map to the same palette name are
    combined; output is sorted by fraction descending and fractions sum to 1.
    """
    arr = np.asarray(pixels).reshape(-1, 3)
    if arr.shape[0] == 0:
        raise ValueError("no pixels given")
    labs = rgb_to_lab(arr)
    merged = merge_clusters(kmeans_lab(labs, k=k, seed=seed), merge_threshold)
    total = float(sum(m for _, m in merged))
    by_name: dict[str, tuple[np.ndarray, float]] = {}
    for center, mass in merged:
        name = name_color(center, palette)
        c = np.asarray(center)
        if name in by_name:
            prev_c, prev_m = by_name[name]
            by_name[name] = ((prev_c * prev_m + c * mass) / (prev_m + mass), prev_m + mass)
        else:
            by_name[name] = (c, float(mass))
    shares = [
        ColorShare(name=n, lab=LabColor(*c), fraction=m / total)
        for n, (c, m) in by_name.items()
    ]
    shares.sort(key=lambda s: (-s.fraction, s.name))
    return shares
