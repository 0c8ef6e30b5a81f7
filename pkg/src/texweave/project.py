"""Project container: input image, segmentation, masks, edit log, codec.

A project is a directory::

    manifest.json   version, dimensions, pipeline config, mask ranges,
                    segmentation params, edit log
    input.png       the 8-bit RGB input image
    labels.npy      segment label map (int32)
    masks.twv       mask container (latents, full f32 precision)
    edits/          payload files referenced by edit-log entries

The edit log is stored, not baked: the live state (masks, segment colors,
overlay) is reconstructed by replaying the log over the base state, which
makes undo a replay of a log prefix and keeps renders byte-reproducible.

Mask container byte layout (all little-endian): magic ``TXWV``; u32 version;
u32 H; u32 W; u32 M; then M length-prefixed (u32) UTF-8 mask names; then M
pairs of (f32 lo, f32 hi); then M planes of H*W f32 latents.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import editing
from .pipeline import (
    BumpConfig,
    MASK_NAMES,
    ParameterMaskSet,
    PipelineConfig,
    XdogConfig,
    apply_pipeline,
)
from .slic import SegmentMap, _segment_means, resegment_region
from .tensor import InvalidArgument

MANIFEST_VERSION = "1.0"
CONTAINER_MAGIC = b"TXWV"
CONTAINER_VERSION = 1


class FormatError(ValueError):
    """Malformed project or mask-container file; carries the byte offset."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# mask container codec
# ---------------------------------------------------------------------------

def save_mask_container(masks: ParameterMaskSet, path):
    h, w = masks.shape
    names = list(MASK_NAMES)
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<IIII", CONTAINER_VERSION, h, w, len(names)))
        for name in names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        for name in names:
            lo, hi = masks.ranges[name]
            fh.write(struct.pack("<ff", lo, hi))
        for name in names:
            fh.write(masks.latents[name].astype("<f4").tobytes())


def load_mask_container(path) -> ParameterMaskSet:
    data = Path(path).read_bytes()
    off = 0

    def need(n, what):
        nonlocal off
        if off + n > len(data):
            raise FormatError(f"truncated container: missing {what}", off)
        chunk = data[off:off + n]
        off += n
        return chunk

    if need(4, "magic") != CONTAINER_MAGIC:
        raise FormatError("bad magic, not a mask container", 0)
    version, h, w, m = struct.unpack("<IIII", need(16, "header"))
    if version != CONTAINER_VERSION:
        raise FormatError(f"unsupported container version {version}", 4)
    names = []
    for i in range(m):
        (n,) = struct.unpack("<I", need(4, f"name length {i}"))
        names.append(need(n, f"name {i}").decode("utf-8"))
    if len(set(names)) != len(names):
        raise FormatError("duplicate mask names", off)
    ranges = {}
    for name in names:
        lo, hi = struct.unpack("<ff", need(8, f"range for {name}"))
        ranges[name] = (lo, hi)
    latents = {}
    plane_bytes = h * w * 4
    for i, name in enumerate(names):
        raw = need(plane_bytes, f"plane {i} ({name})")
        latents[name] = np.frombuffer(raw, dtype="<f4").reshape(h, w).copy()
    if off != len(data):
        raise FormatError("trailing bytes after last plane", off)
    return ParameterMaskSet(latents=latents, ranges=ranges)


# ---------------------------------------------------------------------------
# image IO
# ---------------------------------------------------------------------------

def load_image(path) -> np.ndarray:
    """Decode an 8-bit RGB PNG/JPEG into a float image in [0,1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"))
    return arr.astype(np.float32) / 255.0


def save_image(img: np.ndarray, path):
    """Write a [0,1] float image as 8-bit (grayscale or RGB) PNG."""
    arr = np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def _config_to_dict(cfg: PipelineConfig) -> dict:
    d = asdict(cfg)
    d["bump"]["light_dir"] = [float(v) for v in cfg.bump.light_dir]
    d["bump"]["view_dir"] = [float(v) for v in cfg.bump.view_dir]
    return d


def _config_from_dict(d: dict) -> PipelineConfig:
    bump = dict(d["bump"])
    bump["light_dir"] = np.asarray(bump["light_dir"], dtype=np.float64)
    bump["view_dir"] = np.asarray(bump["view_dir"], dtype=np.float64)
    return PipelineConfig(
        pre_smooth_sigma=d["pre_smooth_sigma"],
        pre_smooth_radius=d["pre_smooth_radius"],
        bilateral_radius=d["bilateral_radius"],
        xdog=XdogConfig(**d["xdog"]),
        bump=BumpConfig(**bump),
        contrast_mean_sigma=d["contrast_mean_sigma"],
        enabled=dict(d["enabled"]),
    )


# ---------------------------------------------------------------------------
# project
# ---------------------------------------------------------------------------

@dataclass
class Project:
    """Binds the input image, segmentation, base masks, and the edit log.

    ``seg``, ``masks``, ``overlay`` are the live (post-replay) state.
    """

    image: np.ndarray
    config: PipelineConfig
    base_seg: SegmentMap
    base_masks: ParameterMaskSet
    seg_params: dict
    edit_log: list = field(default_factory=list)
    root: Path | None = None   # payload dir for edit-log file references
    seg: SegmentMap = None
    masks: ParameterMaskSet = None
    overlay: editing.Overlay | None = None

    def __post_init__(self):
        if self.seg is None:
            self.replay()

    # -- state ------------------------------------------------------------

    def replay(self, upto: int | None = None):
        """Rebuild live state from the base state and an edit-log prefix."""
        self.seg = SegmentMap(labels=self.base_seg.labels.copy(),
                              segment_count=self.base_seg.segment_count,
                              mean_colors=self.base_seg.mean_colors.copy(),
                              compactness=self.base_seg.compactness,
                              requested_segments=self.base_seg.requested_segments)
        self.masks = self.base_masks.copy()
        self.overlay = None
        log = self.edit_log if upto is None else self.edit_log[:upto]
        for entry in log:
            self._apply(entry)
        return self

    def apply_edit(self, entry: dict):
        """Validate and apply one edit, then append it to the log."""
        self._apply(entry)
        self.edit_log.append(entry)

    def _apply(self, entry):
        op = entry.get("op")
        if op == "global":
            self.masks = editing.global_adjust(self.masks, entry["mask"],
                                               entry.get("factor", 1.0),
                                               entry.get("offset", 0.0))
        elif op == "brush":
            stroke = editing.BrushStroke(
                center=(entry["x"], entry["y"]), radius=entry["radius"],
                hardness=entry.get("hardness", 1.0), value=entry["value"],
                mode=entry.get("mode", "set"))
            self.masks = editing.apply_brush(self.masks, entry["mask"], stroke)
        elif op == "blend":
            base = Path(self.root) if self.root is not None else Path(".")
            mask_a = load_mask_container(base / entry["a"])
            mask_b = load_mask_container(base / entry["b"])
            blend = editing.load_blend_mask(base / entry["mask_file"])
            self.masks = editing.interpolate_masks(mask_a, mask_b, blend)
        elif op == "match":
            self.seg = editing.histogram_match_segments(
                self.seg, entry["source"], entry["reference"])
        elif op == "lod":
            region = np.isin(self.seg.labels, np.asarray(entry["labels"]))
            self.seg = resegment_region(self.image, self.seg, region,
                                        entry["s_local"])
        elif op == "copy":
            self.overlay = editing.copy_region(
                self.seg, entry["labels"], (entry["dx"], entry["dy"]),
                self.abstraction(), overlay=self.overlay)
        elif op == "color_blend":
            self.seg = editing.color_interpolate(self.seg, entry["labels"],
                                                 entry["color"], entry["t"])
        elif op == "content_blend":
            self.seg = editing.content_interpolate(self.seg, self.image,
                                                   entry["labels"], entry["t"])
        else:
            raise InvalidArgument(f"unknown edit op {op!r}")

    # -- rendering & metrics ----------------------------------------------

    def abstraction(self) -> np.ndarray:
        return editing.compose_abstraction(self.seg, self.overlay)

    def render(self) -> np.ndarray:
        ia = self.abstraction().astype(np.float32)
        return apply_pipeline(ia, self.masks, self.config)

    def metrics(self, against: np.ndarray | None = None) -> dict:
        from .optimize import l1_target_loss, tv_loss

        target = self.image if against is None else against
        return {
            "l1": l1_target_loss(self.render().astype(np.float64),
                                 target.astype(np.float64)),
            "tv": tv_loss(self.masks),
            "noise_sigma": editing.estimate_noise_sigma(self.masks),
        }


def save_project(project: Project, path):
    """Write a project directory; mask latents round-trip bit-exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    save_image(project.image, root / "input.png")
    np.save(root / "labels.npy", project.base_seg.labels)
    save_mask_container(project.base_masks, root / "masks.twv")
    manifest = {
        "version": MANIFEST_VERSION,
        "height": int(project.image.shape[0]),
        "width": int(project.image.shape[1]),
        "pipeline": _config_to_dict(project.config),
        "mask_ranges": {n: list(r) for n, r in project.base_masks.ranges.items()},
        "segmentation": project.seg_params,
        "edit_log": project.edit_log,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_project(path) -> Project:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("version")
    if version is None or version.split(".")[0] != MANIFEST_VERSION.split(".")[0]:
        raise FormatError(f"unsupported project version {version!r}")
    image = load_image(root / "input.png")
    labels = np.load(root / "labels.npy")
    count = int(labels.max()) + 1
    base_seg = SegmentMap(
        labels=labels, segment_count=count,
        mean_colors=_segment_means(image.astype(np.float64), labels, count),
        compactness=manifest["segmentation"].get("m", 10.0),
        requested_segments=manifest["segmentation"].get("s", count))
    base_masks = load_mask_container(root / "masks.twv")
    return Project(image=image,
                   config=_config_from_dict(manifest["pipeline"]),
                   base_seg=base_seg, base_masks=base_masks,
                   seg_params=manifest["segmentation"],
                   edit_log=list(manifest["edit_log"]), root=root)
