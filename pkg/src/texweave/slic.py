"""SLIC superpixel segmentation and the uniform-color abstraction stage.

Produces a label map plus per-segment mean colors; the abstraction image is
every pixel replaced by its segment's mean. Seeding is a regular grid at
interval sqrt(HW/s), seeds perturbed to the lowest-gradient 3x3 neighbor,
assignment within local windows using the combined CIELAB/spatial distance
D = sqrt(d_lab^2 + m^2 d_xy^2 / S^2). Distance ties break toward the lower
seed index so runs are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .tensor import InvalidArgument, validate_image

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

# D65 reference white
_XN, _YN, _ZN = 0.95047, 1.0, 1.08883
_RGB2XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """sRGB in [0,1] -> CIELAB (D65)."""
    img = validate_image(img, channels=3).astype(np.float64)
    linear = np.where(img <= 0.04045, img / 12.92, ((img + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB2XYZ.T
    xyz /= np.array([_XN, _YN, _ZN])
    delta = 6.0 / 29.0
    f = np.where(xyz > delta ** 3, np.cbrt(xyz), xyz / (3 * delta ** 2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


@dataclass
class SegmentMap:
    """Per-pixel segment labels with per-segment mean colors."""

    labels: np.ndarray          # (H, W) int32, contiguous 0..segment_count-1
    segment_count: int
    mean_colors: np.ndarray     # (segment_count, 3) float64
    compactness: float
    requested_segments: int

    @property
    def shape(self):
        return self.labels.shape


def _segment_means(img: np.ndarray, labels: np.ndarray, count: int) -> np.ndarray:
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count).astype(np.float64)
    sizes[sizes == 0] = 1.0
    means = np.empty((count, 3), dtype=np.float64)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    for c in range(3):
        means[:, c] = np.bincount(flat, weights=img[:, :, c].ravel(),
                                  minlength=count) / sizes
    return means


def _seed_grid(h: int, w: int, s: int) -> np.ndarray:
    """Seed centers (y, x) on a regular grid of roughly s cells."""
    ny = max(1, round(np.sqrt(s * h / w)))
    nx = max(1, round(s / ny))
    ys = (np.arange(ny) + 0.5) * h / ny - 0.5
    xs = (np.arange(nx) + 0.5) * w / nx - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def _perturb_seeds(seeds: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Move each seed to its strictly lowest-gradient 3x3 integer neighbor."""
    h, w = grad.shape
    out = seeds.copy()
    for i, (sy, sx) in enumerate(seeds):
        cy = int(np.clip(np.floor(sy + 0.5), 1, h - 2))
        cx = int(np.clip(np.floor(sx + 0.5), 1, w - 2))
        best = grad[cy, cx]
        by, bx = cy, cx
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                g = grad[cy + dy, cx + dx]
                if g < best:
                    best = g
                    by, bx = cy + dy, cx + dx
        if (by, bx) != (cy, cx):
            out[i] = (by, bx)
    return out


def slic_segment(img: np.ndarray, s: int, m: float = 10.0,
                 iters: int = 10) -> SegmentMap:
    """Segment ``img`` into roughly ``s`` superpixels of compactness ``m``."""
    img = validate_image(img)
    h, w = img.shape[:2]
    if s < 1 or iters < 1:
        raise InvalidArgument("s and iters must be >= 1")
    if m <= 0:
        raise InvalidArgument("compactness m must be positive")
    if s > h * w:
        raise InvalidArgument(f"s={s} exceeds pixel count {h * w}")

    lab = rgb_to_lab(img if img.ndim == 3 else np.repeat(img[:, :, None], 3, axis=2))
    interval = np.sqrt(h * w / s)

    gy, gx = np.gradient(lab, axis=(0, 1))
    grad = (gy ** 2 + gx ** 2).sum(axis=-1)

    seeds = _perturb_seeds(_seed_grid(h, w, s), grad)
    n = len(seeds)
    ipos = np.clip(np.floor(seeds + 0.5).astype(int), 0, [h - 1, w - 1])
    centers_lab = lab[ipos[:, 0], ipos[:, 1]].copy()
    centers_pos = seeds.astype(np.float64)

    ny = max(1, round(np.sqrt(s * h / w)))
    nx = max(1, round(s / ny))
    win_y = int(np.ceil(2 * max(interval, h / ny)))
    win_x = int(np.ceil(2 * max(interval, w / nx)))
    ratio = (m / interval) ** 2

    yy, xx = np.mgrid[0:h, 0:w]
    labels = np.zeros((h, w), dtype=np.int32)

    for _ in range(iters):
        dist = np.full((h, w), np.inf)
        labels.fill(-1)
        for k in range(n):
            cy, cx = centers_pos[k]
            y0, y1 = max(0, int(cy) - win_y), min(h, int(cy) + win_y + 1)
            x0, x1 = max(0, int(cx) - win_x), min(w, int(cx) + win_x + 1)
            patch = lab[y0:y1, x0:x1]
            d_lab = ((patch - centers_lab[k]) ** 2).sum(axis=-1)
            d_xy = (yy[y0:y1, x0:x1] - cy) ** 2 + (xx[y0:y1, x0:x1] - cx) ** 2
            d = d_lab + ratio * d_xy
            better = d < dist[y0:y1, x0:x1]
            dist[y0:y1, x0:x1][better] = d[better]
            labels[y0:y1, x0:x1][better] = k
        # stragglers outside every window: nearest center spatially
        if (labels < 0).any():
            miss = np.argwhere(labels < 0)
            d = ((miss[:, None, :] - centers_pos[None, :, :]) ** 2).sum(axis=-1)
            labels[miss[:, 0], miss[:, 1]] = np.argmin(d, axis=1)

        flat = labels.ravel()
        sizes = np.bincount(flat, minlength=n).astype(np.float64)
        nonempty = sizes > 0
        safe = np.where(nonempty, sizes, 1.0)
        for c in range(3):
            mean_c = np.bincount(flat, weights=lab[:, :, c].ravel(), minlength=n) / safe
            centers_lab[nonempty, c] = mean_c[nonempty]
        mean_y = np.bincount(flat, weights=yy.ravel(), minlength=n) / safe
        mean_x = np.bincount(flat, weights=xx.ravel(), minlength=n) / safe
        centers_pos[nonempty, 0] = mean_y[nonempty]
        centers_pos[nonempty, 1] = mean_x[nonempty]

    min_size = max(1, int((h * w / s) / 4))
    labels = enforce_connectivity(labels, min_size)
    count = int(labels.max()) + 1
    return SegmentMap(labels=labels, segment_count=count,
                      mean_colors=_segment_means(img, labels, count),
                      compactness=m, requested_segments=s)


def _connected_components(labels: np.ndarray):
    """Split a label map into 4-connected components (component id map, count)."""
    comp = np.full(labels.shape, -1, dtype=np.int32)
    ncomp = 0
    for l, sl in enumerate(ndimage.find_objects(labels + 1)):
        if sl is None:
            continue
        mask = labels[sl] == l
        cc, k = ndimage.label(mask, structure=_FOUR_CONN)
        view = comp[sl]
        view[mask] = ncomp + cc[mask] - 1
        ncomp += k
    return comp, ncomp


def enforce_connectivity(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Merge connected components smaller than ``min_size`` into their largest
    adjacent component; relabel contiguously in scan order."""
    comp, ncomp = _connected_components(np.ascontiguousarray(labels))
    sizes = np.bincount(comp.ravel(), minlength=ncomp).astype(np.int64)

    # adjacency from horizontal/vertical neighbor pairs
    pairs = set()
    a, b = comp[:, :-1].ravel(), comp[:, 1:].ravel()
    diff = a != b
    pairs.update(zip(a[diff].tolist(), b[diff].tolist()))
    a, b = comp[:-1, :].ravel(), comp[1:, :].ravel()
    diff = a != b
    pairs.update(zip(a[diff].tolist(), b[diff].tolist()))
    adj = [set() for _ in range(ncomp)]
    for p, q in pairs:
        adj[p].add(q)
        adj[q].add(p)

    parent = np.arange(ncomp)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    changed = True
    while changed:
        changed = False
        for i in range(ncomp):
            if find(i) != i or sizes[i] >= min_size or not adj[i]:
                continue
            # largest current neighbor group; ties toward the lower root index
            roots = {find(j) for j in adj[i]} - {i}
            if not roots:
                continue
            target = min(roots, key=lambda r: (-sizes[r], r))
            parent[i] = target
            sizes[target] += sizes[i]
            adj[target] |= adj[i]
            adj[target].discard(target)
            adj[target].discard(i)
            changed = True

    roots = np.array([find(i) for i in range(ncomp)])
    merged = roots[comp]
    uniq, first = np.unique(merged, return_index=True)
    order = np.argsort(first)
    remap = np.empty(uniq.max() + 1, dtype=np.int32)
    remap[uniq[order]] = np.arange(len(uniq), dtype=np.int32)
    return remap[merged]


def render_abstraction(img: np.ndarray, seg: SegmentMap) -> np.ndarray:
    """Replace every pixel by its segment's mean color (the abstraction image)."""
    img = validate_image(img)
    if seg.labels.shape != img.shape[:2]:
        raise InvalidArgument("segment map does not match image dimensions")
    return seg.mean_colors[seg.labels]


def resegment_region(img: np.ndarray, seg: SegmentMap, region: np.ndarray,
                     s_local: int, m: float | None = None,
                     iters: int = 10) -> SegmentMap:
    """Re-run SLIC inside ``region`` only, leaving outside labels untouched."""
    img = validate_image(img)
    region = np.asarray(region, dtype=bool)
    if region.shape != seg.labels.shape:
        raise InvalidArgument("region does not match segment map dimensions")
    if not region.any():
        raise InvalidArgument("region is empty")
    if s_local < 1:
        raise InvalidArgument("s_local must be >= 1")
    m = seg.compactness if m is None else m

    ys, xs = np.where(region)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    sub = slic_segment(img[y0:y1, x0:x1], s_local, m=m, iters=iters)

    old_count = seg.segment_count
    labels = seg.labels.copy()
    sub_region = region[y0:y1, x0:x1]
    labels[region] = (sub.labels + old_count)[sub_region]

    # drop labels that vanished; keep surviving ids in ascending order
    present = np.unique(labels)
    remap = np.full(labels.max() + 1, -1, dtype=np.int32)
    remap[present] = np.arange(len(present), dtype=np.int32)
    labels = remap[labels]
    count = len(present)
    return SegmentMap(labels=labels, segment_count=count,
                      mean_colors=_segment_means(img, labels, count),
                      compactness=m, requested_segments=seg.requested_segments)
