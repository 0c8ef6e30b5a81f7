"""Decomposition losses, the Adam schedule, and the end-to-end optimizer.

The loss is mean-l1 to the target plus lambda_tv times an anisotropic total
variation penalty on the range-normalized masks. Masks are optimized through
their sigmoid latents (100 Adam steps by default, lr 0.01 decayed by 0.98
every 5 iterations starting at iteration 50), so no projection is needed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .pipeline import (
    MASK_NAMES,
    ParameterMaskSet,
    PipelineConfig,
    pipeline_backward,
    pipeline_forward,
)
from .slic import SegmentMap, render_abstraction
from .tensor import InvalidArgument


@dataclass
class LossConfig:
    lambda_tv: float = 0.2

    def __post_init__(self):
        if self.lambda_tv < 0:
            raise InvalidArgument("lambda_tv must be >= 0")


def l1_target_loss(output, target):
    """Mean absolute difference over all pixels and channels."""
    output = np.asarray(output)
    target = np.asarray(target)
    if output.shape != target.shape:
        raise InvalidArgument("output and target dimensions differ")
    return float(np.abs(output - target).mean())


def l1_target_grad(output, target):
    """Subgradient of the mean-l1 loss, with sign(0) = 0."""
    return np.sign(output - target) / output.size


def _tv_of_normalized(p_hat):
    return float(np.abs(np.diff(p_hat, axis=0)).sum()
                 + np.abs(np.diff(p_hat, axis=1)).sum())


def _tv_grad_of_normalized(p_hat):
    g = np.zeros_like(p_hat)
    d = np.sign(np.diff(p_hat, axis=0))
    g[1:, :] += d
    g[:-1, :] -= d
    d = np.sign(np.diff(p_hat, axis=1))
    g[:, 1:] += d
    g[:, :-1] -= d
    return g


def tv_loss(masks: ParameterMaskSet, active=None):
    """Anisotropic TV on range-normalized masks, averaged over masks and pixels."""
    names = MASK_NAMES if active is None else active
    h, w = masks.shape
    total = sum(_tv_of_normalized(masks.normalized(n)) for n in names)
    return total / (len(names) * h * w)


def total_loss(output, target, masks: ParameterMaskSet, loss_cfg: LossConfig,
               active=None):
    return (l1_target_loss(output, target)
            + loss_cfg.lambda_tv * tv_loss(masks, active=active))


def lr_schedule(iteration: int, base: float = 0.01, factor: float = 0.98,
                start: int = 50, every: int = 5) -> float:
    """Constant lr until ``start``, then multiplied by ``factor`` at every
    ``every``-iteration boundary (iterations 50, 55, 60, ... by default)."""
    if iteration < start:
        return base
    return base * factor ** ((iteration - start) // every + 1)


@dataclass
class OptimizerState:
    """Adam accumulators per mask latent."""

    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: OptimizerState, latents: dict, grads: dict, lr: float):
    """One bias-corrected Adam update on every latent present in ``grads``."""
    state.step += 1
    t = state.step
    for name, g in grads.items():
        z = latents[name]
        if g.shape != z.shape:
            raise InvalidArgument(f"gradient shape mismatch for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(z)
            state.v[name] = np.zeros_like(z)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        z -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return latents, state


def loss_and_gradients(target, abstraction, masks: ParameterMaskSet,
                       cfg: PipelineConfig, loss_cfg: LossConfig):
    """Forward + backward pass: returns (l1, tv, total, latent gradients).

    Gradients cover only masks of enabled filters; disabled filters' masks
    are excluded from both the update and the TV term.
    """
    active = cfg.active_masks()
    ranged = masks.ranged_all()
    output, tape = pipeline_forward(abstraction, ranged, cfg)
    l1 = l1_target_loss(output, target)
    tv = tv_loss(masks, active=active)

    _, mask_cots = pipeline_backward(tape, l1_target_grad(output, target))
    h, w = masks.shape
    tv_norm = loss_cfg.lambda_tv / (len(active) * h * w)
    grads = {}
    for name in active:
        lo, hi = masks.ranges[name]
        s = expit(masks.latents[name])
        dsig = s * (1.0 - s)
        g = mask_cots[name] * (hi - lo) * dsig
        if tv_norm > 0:
            g = g + tv_norm * _tv_grad_of_normalized(s) * dsig
        grads[name] = g.astype(masks.latents[name].dtype)
    return l1, tv, l1 + loss_cfg.lambda_tv * tv, grads, output


def decompose(target, seg: SegmentMap, cfg: PipelineConfig | None = None,
              loss_cfg: LossConfig | None = None, iters: int = 100,
              base_lr: float = 0.01, dtype=np.float32, progress=None):
    """Optimize a fresh mask set so the pipeline output matches ``target``.

    Deterministic: latents initialize to z=0 (range midpoints) and every
    iteration takes one full-gradient Adam step. Returns (masks, trace) where
    the trace holds one row per iteration: iteration, lr, l1, tv, total.
    """
    if iters < 1:
        raise InvalidArgument("iters must be >= 1")
    cfg = cfg if cfg is not None else PipelineConfig()
    loss_cfg = loss_cfg if loss_cfg is not None else LossConfig()
    target = np.asarray(target, dtype=dtype)
    abstraction = render_abstraction(target, seg).astype(dtype)

    h, w = target.shape[:2]
    masks = ParameterMaskSet.initialize(h, w, dtype=dtype)
    state = OptimizerState()
    trace = []
    for t in range(iters):
        lr = lr_schedule(t, base=base_lr)
        l1, tv, total, grads, _ = loss_and_gradients(
            target, abstraction, masks, cfg, loss_cfg)
        adam_step(state, masks.latents, grads, lr)
        trace.append({"iteration": t, "lr": lr, "l1": l1, "tv": tv,
                      "total": total})
        if progress is not None:
            progress(t, trace[-1])
    return masks, trace


def export_trace(trace, path):
    """Write the per-iteration loss trace as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["iteration", "lr", "l1", "tv",
                                                "total"])
        writer.writeheader()
        writer.writerows(trace)
