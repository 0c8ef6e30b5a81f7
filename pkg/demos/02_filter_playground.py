"""Drive the painterly filter pipeline by hand, one parameter at a time.

No optimization here: masks are set directly to show what each filter
contributes. Also renders the four single-filter ablations for comparison.
"""

from pathlib import Path

import numpy as np

from texweave.pipeline import (FILTER_NAMES, ParameterMaskSet, PipelineConfig,
                               ablation_config, apply_pipeline)
from texweave.project import load_image, save_image

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

image = load_image(HERE.parent / "tests" / "data" / "astronaut.png")
img32 = image.astype(np.float32)
h, w = image.shape[:2]

masks = ParameterMaskSet.initialize(h, w)
save_image(apply_pipeline(img32, masks, PipelineConfig()),
           OUT / "playground_midpoints.png")

# crank individual parameters to see their visual effect
strong = masks.copy()
strong.set_ranged("bump_scale", np.full((h, w), 4.5))
strong.set_ranged("bump_opacity", np.full((h, w), 0.9))
save_image(apply_pipeline(img32, strong, PipelineConfig()),
           OUT / "playground_bumpy.png")

inky = masks.copy()
inky.set_ranged("contour_amount", np.full((h, w), 1.8))
inky.set_ranged("contour_opacity", np.full((h, w), 0.95))
save_image(apply_pipeline(img32, inky, PipelineConfig()),
           OUT / "playground_contours.png")

# spatially varying: bumpy left half, flat right half
split = masks.copy()
bump = np.zeros((h, w))
bump[:, : w // 2] = 4.0
split.set_ranged("bump_scale", bump)
save_image(apply_pipeline(img32, split, PipelineConfig()),
           OUT / "playground_split.png")

for name in FILTER_NAMES:
    out = apply_pipeline(img32, masks, ablation_config(name))
    save_image(out, OUT / f"playground_no_{name}.png")
    print(f"rendered ablation without {name}")

print(f"wrote playground renders to {OUT}")
