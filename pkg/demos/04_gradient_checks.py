"""Verify the hand-derived adjoints against finite differences.

Every filter ships a hand-written backward pass (no autodiff anywhere);
this script probes each one, then the full pipeline loss, and prints the
worst relative error. It also prints the smoothness margins that tell us
whether a finite-difference probe could have crossed a gate (relu / clamp /
threshold), which is the usual source of false alarms.
"""

import numpy as np

from texweave.optimize import LossConfig, loss_and_gradients
from texweave.pipeline import (MASK_NAMES, ParameterMaskSet, PipelineConfig,
                               pipeline_forward, smoothness_margins)
from texweave.slic import render_abstraction, slic_segment
from texweave.tensor import check_gradients

rng = np.random.default_rng(0)
target = rng.random((16, 16, 3))
seg = slic_segment(target, 4)
ia = render_abstraction(target, seg)

masks = ParameterMaskSet.initialize(16, 16, dtype=np.float64)
for n in MASK_NAMES:
    masks.latents[n] = rng.normal(scale=0.4, size=(16, 16))

cfg = PipelineConfig()
lcfg = LossConfig(lambda_tv=0.2)
out, tape = pipeline_forward(ia, masks.ranged_all(), cfg)
margins = smoothness_margins(tape, out, target=target)
print("smoothness margins (distance to the nearest gate flip):")
for k, v in margins.items():
    print(f"  {k:18s} {v:.2e}")

_, _, _, grads, _ = loss_and_gradients(target, ia, masks, cfg, lcfg)
print("\nfull-pipeline loss gradient vs central differences:")
for name in MASK_NAMES:
    def f(z, name=name):
        probe = masks.copy()
        probe.latents[name] = z
        return loss_and_gradients(target, ia, probe, cfg, lcfg)[2]
    err = check_gradients(f, masks.latents[name], grads[name],
                          probe_count=20, rng=7)
    print(f"  {name:18s} max rel err {err:.2e}")
