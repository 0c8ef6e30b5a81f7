"""texweave: decompose images into superpixel abstractions plus editable
per-pixel texture parameter masks of a differentiable painterly filter
pipeline."""

from .tensor import InvalidArgument, check_gradients, validate_image
from .slic import SegmentMap, enforce_connectivity, render_abstraction, \
    resegment_region, slic_segment
from .pipeline import MASK_NAMES, FILTER_NAMES, ParameterMaskSet, \
    PipelineConfig, ablation_config, apply_pipeline, pipeline_forward, \
    pipeline_backward, smoothness_margins
from .optimize import LossConfig, decompose, lr_schedule, total_loss
from .editing import BrushStroke, Overlay, apply_brush, compose_abstraction, \
    content_interpolate, color_interpolate, copy_region, estimate_noise_sigma, \
    global_adjust, histogram_match_segments, interpolate_masks
from .project import FormatError, Project, load_image, load_mask_container, \
    load_project, save_image, save_mask_container, save_project

__version__ = "0.1.0"

__all__ = [
    "InvalidArgument", "check_gradients", "validate_image",
    "SegmentMap", "enforce_connectivity", "render_abstraction",
    "resegment_region", "slic_segment",
    "MASK_NAMES", "FILTER_NAMES", "ParameterMaskSet", "PipelineConfig",
    "ablation_config", "apply_pipeline", "pipeline_forward",
    "pipeline_backward", "smoothness_margins",
    "LossConfig", "decompose", "lr_schedule", "total_loss",
    "BrushStroke", "Overlay", "apply_brush", "compose_abstraction",
    "content_interpolate", "color_interpolate", "copy_region",
    "estimate_noise_sigma", "global_adjust", "histogram_match_segments",
    "interpolate_masks",
    "FormatError", "Project", "load_image", "load_mask_container",
    "load_project", "save_image", "save_mask_container", "save_project",
    "__version__",
]
