"""Tour of the editing operators on a decomposed project.

Builds a small project, then applies each editing tool in turn: a global
slider move, a brush stroke, histogram matching between segment groups,
a level-of-detail resegmentation, and a copy of segments by translation.
Every edit goes through the project's edit log, so the whole session
replays deterministically.
"""

from pathlib import Path

import numpy as np

from texweave import decompose, slic_segment
from texweave.pipeline import PipelineConfig
from texweave.project import Project, load_image, save_image, save_project

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

image = load_image(HERE.parent / "tests" / "data" / "rocket.png")
seg = slic_segment(image, 400)
masks, _ = decompose(image, seg, iters=25)
project = Project(image=image, config=PipelineConfig(), base_seg=seg,
                  base_masks=masks, seg_params={"s": 400},
                  root=OUT / "edit_project")
save_image(project.render(), OUT / "edit_0_base.png")

project.apply_edit({"op": "global", "mask": "bump_scale", "factor": 1.6})
save_image(project.render(), OUT / "edit_1_more_relief.png")

project.apply_edit({"op": "brush", "mask": "contour_opacity",
                    "x": 128, "y": 100, "radius": 50, "hardness": 0.4,
                    "value": 0.95})
save_image(project.render(), OUT / "edit_2_inked_circle.png")

# recolor the darkest quarter of segments from the brightest quarter
order = np.argsort(project.seg.mean_colors.sum(axis=1))
quarter = len(order) // 4
project.apply_edit({"op": "match",
                    "source": [int(l) for l in order[:quarter]],
                    "reference": [int(l) for l in order[-quarter:]]})
save_image(project.render(), OUT / "edit_3_matched.png")

project.apply_edit({"op": "lod", "labels": [int(order[-1])], "s_local": 12})
print(f"after lod refinement: {project.seg.segment_count} segments")

# lod renumbers labels, so pick the segment to copy afterwards
largest = int(np.bincount(project.seg.labels.ravel()).argmax())
project.apply_edit({"op": "copy", "labels": [largest], "dx": -40, "dy": 0})
save_image(project.render(), OUT / "edit_4_copied.png")

save_project(project, OUT / "edit_project")
print(f"edit log: {[e['op'] for e in project.edit_log]}")

# undo everything by replaying an empty prefix
project.replay(upto=0)
save_image(project.render(), OUT / "edit_5_undone.png")
base = (OUT / "edit_0_base.png").read_bytes()
undone = (OUT / "edit_5_undone.png").read_bytes()
print(f"undo restored the original render bytes: {base == undone}")
