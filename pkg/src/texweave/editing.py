"""Post-decomposition editing operators on parameter masks and segments.

All edits are pure: they return fresh mask sets / segment maps (or overlay
layers) and leave everything not named by the edit bit-identical, so an edit
log can be replayed deterministically for undo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import MASK_NAMES, ParameterMaskSet
from .slic import SegmentMap
from .tensor import InvalidArgument, validate_image


@dataclass
class BrushStroke:
    center: tuple          # (x, y) in pixels
    radius: float
    hardness: float        # [0,1]; fraction of the radius at full weight
    value: float           # target in the mask's ranged units
    mode: str = "set"      # "set" or "add"


@dataclass
class Overlay:
    """Literal-color overlay on the abstraction image (used by copy_region)."""

    mask: np.ndarray       # (H, W) bool
    colors: np.ndarray     # (H, W, 3) float

    @classmethod
    def empty(cls, height, width):
        return cls(mask=np.zeros((height, width), dtype=bool),
                   colors=np.zeros((height, width, 3), dtype=np.float64))

    def copy(self):
        return Overlay(mask=self.mask.copy(), colors=self.colors.copy())


def compose_abstraction(seg: SegmentMap, overlay: Overlay | None = None):
    """Abstraction image: per-segment mean colors, overridden by the overlay."""
    img = seg.mean_colors[seg.labels]
    if overlay is not None and overlay.mask.any():
        img = np.where(overlay.mask[:, :, None], overlay.colors, img)
    return img


def load_blend_mask(path) -> np.ndarray:
    """Read an 8/16-bit grayscale PNG as a [0,1] blend mask."""
    from PIL import Image

    img = Image.open(path)
    arr = np.asarray(img)
    if arr.ndim == 3:
        arr = arr[:, :, 0]
    scale = 65535.0 if arr.dtype == np.uint16 else 255.0
    return np.clip(arr.astype(np.float64) / scale, 0.0, 1.0)


def global_adjust(masks: ParameterMaskSet, mask_name: str, factor: float,
                  offset: float = 0.0) -> ParameterMaskSet:
    """Uniform affine adjustment of one mask, clamped to its range."""
    if mask_name not in masks.ranges:
        raise InvalidArgument(f"unknown mask {mask_name!r}")
    lo, hi = masks.ranges[mask_name]
    out = masks.copy()
    out.set_ranged(mask_name, np.clip(masks.ranged(mask_name) * factor + offset,
                                      lo, hi))
    return out


def _brush_weights(shape, stroke: BrushStroke):
    h, w = shape
    cx, cy = stroke.center
    yy, xx = np.mgrid[0:h, 0:w]
    d = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
    inner = stroke.hardness * stroke.radius
    if stroke.radius <= inner:
        return (d <= stroke.radius).astype(np.float64)
    t = np.clip((stroke.radius - d) / (stroke.radius - inner), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def apply_brush(masks: ParameterMaskSet, mask_name: str,
                stroke: BrushStroke) -> ParameterMaskSet:
    """Paint one falloff stroke on a mask (strokes are clipped to the image)."""
    if mask_name not in masks.ranges:
        raise InvalidArgument(f"unknown mask {mask_name!r}")
    if stroke.radius <= 0:
        raise InvalidArgument("brush radius must be positive")
    lo, hi = masks.ranges[mask_name]
    if stroke.mode == "set" and not lo <= stroke.value <= hi:
        raise InvalidArgument(f"brush value {stroke.value} outside "
                              f"[{lo}, {hi}] for mode=set")
    if stroke.mode not in ("set", "add"):
        raise InvalidArgument(f"unknown brush mode {stroke.mode!r}")
    w = _brush_weights(masks.shape, stroke)
    p = masks.ranged(mask_name)
    if stroke.mode == "set":
        p = (1.0 - w) * p + w * stroke.value
    else:
        p = np.clip(p + w * stroke.value, lo, hi)
    out = masks.copy()
    out.set_ranged(mask_name, p)
    return out


def interpolate_masks(mask_a: ParameterMaskSet, mask_b: ParameterMaskSet,
                      blend: np.ndarray) -> ParameterMaskSet:
    """Per-pixel blend of two mask sets: P = (1-b)*P_A + b*P_B."""
    blend = np.asarray(blend, dtype=np.float64)
    if blend.shape != mask_a.shape or mask_a.shape != mask_b.shape:
        raise InvalidArgument("blend/mask dimensions disagree")
    if mask_a.ranges != mask_b.ranges:
        raise InvalidArgument("mask sets have different ranges")
    out = mask_a.copy()
    for name in MASK_NAMES:
        out.set_ranged(name, (1.0 - blend) * mask_a.ranged(name)
                       + blend * mask_b.ranged(name))
    return out


def estimate_noise_sigma(masks: ParameterMaskSet) -> float:
    """Robust noise estimate averaged over the 8 range-normalized masks.

    Per mask: one-level orthonormal Haar transform, sigma from the median
    absolute diagonal detail coefficient (MAD / 0.6745).
    """
    total = 0.0
    for name in MASK_NAMES:
        p = masks.normalized(name).astype(np.float64)
        h, w = p.shape
        p = p[:h - h % 2, :w - w % 2]
        d = 0.5 * (p[0::2, 0::2] - p[0::2, 1::2] - p[1::2, 0::2] + p[1::2, 1::2])
        total += np.median(np.abs(d)) / 0.6745
    return total / len(MASK_NAMES)


def histogram_match_segments(seg: SegmentMap, source_labels,
                             reference_labels) -> SegmentMap:
    """Map source segments' mean-color distribution onto the reference's.

    Rank-preserving per channel: the i-th smallest source value becomes the
    reference distribution's value at the same quantile.
    """
    source_labels = np.asarray(sorted(set(int(l) for l in source_labels)))
    reference_labels = np.asarray(sorted(set(int(l) for l in reference_labels)))
    if source_labels.size == 0 or reference_labels.size == 0:
        raise InvalidArgument("source and reference selections must be non-empty")
    for l in np.concatenate([source_labels, reference_labels]):
        if not 0 <= l < seg.segment_count:
            raise InvalidArgument(f"label {l} out of range")
    colors = seg.mean_colors.copy()
    n_src = source_labels.size
    n_ref = reference_labels.size
    q_src = (np.arange(n_src) + 0.5) / n_src
    q_ref = (np.arange(n_ref) + 0.5) / n_ref
    for c in range(3):
        src = colors[source_labels, c]
        ref_sorted = np.sort(seg.mean_colors[reference_labels, c])
        order = np.argsort(src, kind="stable")
        mapped = np.interp(q_src, q_ref, ref_sorted)
        colors[source_labels[order], c] = mapped
    return SegmentMap(labels=seg.labels, segment_count=seg.segment_count,
                      mean_colors=colors, compactness=seg.compactness,
                      requested_segments=seg.requested_segments)


def _blend_segment_colors(seg: SegmentMap, region_labels, targets, t):
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument("t must be in [0,1]")
    region_labels = [int(l) for l in region_labels]
    colors = seg.mean_colors.copy()
    for l, tgt in zip(region_labels, targets):
        if not 0 <= l < seg.segment_count:
            raise InvalidArgument(f"label {l} out of range")
        colors[l] = (1.0 - t) * colors[l] + t * np.asarray(tgt, dtype=np.float64)
    return SegmentMap(labels=seg.labels, segment_count=seg.segment_count,
                      mean_colors=colors, compactness=seg.compactness,
                      requested_segments=seg.requested_segments)


def content_interpolate(seg: SegmentMap, content: np.ndarray, region_labels,
                        t: float) -> SegmentMap:
    """Blend selected segments toward the content image's per-segment means."""
    content = validate_image(content, channels=3)
    if content.shape[:2] != seg.labels.shape:
        raise InvalidArgument("content image does not match segment map")
    targets = []
    for l in region_labels:
        sel = seg.labels == int(l)
        targets.append(content[sel].mean(axis=0))
    return _blend_segment_colors(seg, region_labels, targets, t)


def color_interpolate(seg: SegmentMap, region_labels, color, t: float) -> SegmentMap:
    """Blend selected segments toward one user-chosen color."""
    color = np.asarray(color, dtype=np.float64)
    if color.shape != (3,):
        raise InvalidArgument("color must be an RGB triple")
    return _blend_segment_colors(seg, region_labels,
                                 [color] * len(list(region_labels)), t)


def copy_region(seg: SegmentMap, source_labels, translation,
                abstraction: np.ndarray, overlay: Overlay | None = None) -> Overlay:
    """Copy the selected segments' rendered colors by (dx, dy) pixels.

    Realized as a literal-color overlay on the abstraction image; labels are
    untouched. Destination pixels falling outside the image are clipped.
    """
    dx, dy = int(translation[0]), int(translation[1])
    h, w = seg.labels.shape
    src = np.isin(seg.labels, np.asarray(list(source_labels), dtype=np.int64))
    if not src.any():
        raise InvalidArgument("source selection is empty")
    ys, xs = np.nonzero(src)
    yd, xd = ys + dy, xs + dx
    keep = (yd >= 0) & (yd < h) & (xd >= 0) & (xd < w)
    if not keep.any():
        raise InvalidArgument("translated region is fully out of bounds")
    out = overlay.copy() if overlay is not None else Overlay.empty(h, w)
    out.mask[yd[keep], xd[keep]] = True
    out.colors[yd[keep], xd[keep]] = abstraction[ys[keep], xs[keep]]
    return out
