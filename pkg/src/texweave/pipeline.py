"""The differentiable painterly filter pipeline and its per-pixel parameter masks.

Fixed filter order: Gaussian pre-smooth -> bilateral -> contour compositing
(extended difference-of-Gaussians) -> bump-mapped Phong shading -> local
contrast. Eight named masks parameterize the filters; each mask is stored as
an unbounded latent z and viewed through its range as lo + (hi-lo)*sigmoid(z).

Every filter provides a forward pass that records an aux tape entry and a
backward pass mapping the output cotangent to cotangents of its image input
and of its ranged masks. Everything after the bilateral maps each pixel as
c -> s*c + t*(1,1,1) with nonnegative per-pixel scalars, so hue is preserved
wherever no channel clamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .tensor import (
    InvalidArgument,
    central_gradients,
    central_gradients_adjoint,
    gaussian_blur,
    gaussian_blur_adjoint,
    luminance,
    luminance_adjoint,
    validate_image,
)

MASK_NAMES = (
    "bilateral_sigma_d",
    "bilateral_sigma_r",
    "contour_amount",
    "contour_opacity",
    "bump_scale",
    "phong_specular",
    "bump_opacity",
    "contrast",
)

DEFAULT_RANGES = {
    "bilateral_sigma_d": (0.3, 3.0),
    "bilateral_sigma_r": (0.05, 1.0),
    "contour_amount": (0.0, 2.0),
    "contour_opacity": (0.0, 1.0),
    "bump_scale": (0.0, 5.0),
    "phong_specular": (0.0, 1.0),
    "bump_opacity": (0.0, 1.0),
    "contrast": (0.0, 2.0),
}

FILTER_NAMES = ("bilateral", "xdog", "bump", "contrast")

FILTER_MASKS = {
    "bilateral": ("bilateral_sigma_d", "bilateral_sigma_r"),
    "xdog": ("contour_amount", "contour_opacity"),
    "bump": ("bump_scale", "phong_specular", "bump_opacity"),
    "contrast": ("contrast",),
}


def _auto_radius(sigma: float) -> int:
    return max(1, math.ceil(3.0 * sigma))


@dataclass
class ParameterMaskSet:
    """The eight per-pixel masks, stored as latents plus fixed ranges."""

    latents: dict          # name -> (H, W) float array
    ranges: dict           # name -> (lo, hi)

    @classmethod
    def initialize(cls, height, width, ranges=None, dtype=np.float32):
        """Latents start at z=0, i.e. every mask at its range midpoint."""
        ranges = dict(DEFAULT_RANGES if ranges is None else ranges)
        if set(ranges) != set(MASK_NAMES):
            raise InvalidArgument("ranges must cover exactly the 8 mask names")
        for name, (lo, hi) in ranges.items():
            if not lo < hi:
                raise InvalidArgument(f"range for {name} must satisfy lo < hi")
        latents = {n: np.zeros((height, width), dtype=dtype) for n in MASK_NAMES}
        return cls(latents=latents, ranges=ranges)

    @property
    def shape(self):
        return next(iter(self.latents.values())).shape

    def ranged(self, name: str) -> np.ndarray:
        """Mask in parameter units: lo + (hi-lo)*sigmoid(z)."""
        lo, hi = self._range(name)
        return lo + (hi - lo) * expit(self.latents[name])

    def normalized(self, name: str) -> np.ndarray:
        """Mask mapped to [0,1]: sigmoid(z)."""
        self._range(name)
        return expit(self.latents[name])

    def ranged_all(self) -> dict:
        return {n: self.ranged(n) for n in MASK_NAMES}

    def set_ranged(self, name: str, values: np.ndarray) -> None:
        """Re-encode ranged values into latents via the logit, with the
        normalized value clamped to [1e-4, 1-1e-4] to keep latents finite."""
        lo, hi = self._range(name)
        z = self.latents[name]
        norm = np.clip((np.asarray(values, dtype=z.dtype) - lo) / (hi - lo),
                       1e-4, 1.0 - 1e-4)
        self.latents[name] = np.log(norm / (1.0 - norm)).astype(z.dtype)

    def copy(self) -> "ParameterMaskSet":
        return ParameterMaskSet(
            latents={n: v.copy() for n, v in self.latents.items()},
            ranges=dict(self.ranges))

    def _range(self, name):
        if name not in self.ranges:
            raise InvalidArgument(f"unknown mask {name!r}")
        return self.ranges[name]


@dataclass
class XdogConfig:
    k: float = 1.6
    tau: float = 0.99
    epsilon: float = 0.1
    phi: float = 10.0
    sigma_e: float = 1.0


def _normalize(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


@dataclass
class BumpConfig:
    height_sigma: float = 2.0
    light_dir: np.ndarray = field(default_factory=lambda: _normalize((0.3, 0.3, 1.0)))
    view_dir: np.ndarray = field(default_factory=lambda: _normalize((0.0, 0.0, 1.0)))
    shininess: float = 8.0


@dataclass
class PipelineConfig:
    """Fixed (non-learnable) filter constants and per-filter enable flags."""

    pre_smooth_sigma: float = 1.0
    pre_smooth_radius: int = 3
    bilateral_radius: int = 5
    xdog: XdogConfig = field(default_factory=XdogConfig)
    bump: BumpConfig = field(default_factory=BumpConfig)
    contrast_mean_sigma: float = 4.0
    enabled: dict = field(default_factory=lambda: {n: True for n in FILTER_NAMES})

    def __post_init__(self):
        for s in (self.pre_smooth_sigma, self.xdog.sigma_e,
                  self.bump.height_sigma, self.contrast_mean_sigma):
            if s <= 0:
                raise InvalidArgument("all sigmas must be positive")

    def active_masks(self):
        """Mask names belonging to enabled filters, in canonical order."""
        names = []
        for f in FILTER_NAMES:
            if self.enabled.get(f, True):
                names.extend(FILTER_MASKS[f])
        return tuple(names)


def ablation_config(disable: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Config with one filter switched off (its masks drop out of optimization)."""
    if disable not in FILTER_NAMES:
        raise InvalidArgument(f"unknown filter {disable!r}")
    base = base if base is not None else PipelineConfig()
    enabled = dict(base.enabled)
    enabled[disable] = False
    return replace(base, enabled=enabled)


# ---------------------------------------------------------------------------
# individual filters: forward returns (out, aux); backward returns
# (cot_img or None, {mask_name: cot_ranged_mask})
# ---------------------------------------------------------------------------

try:
    from numba import njit, prange
    _HAVE_NUMBA = True
except ImportError:                                   # pragma: no cover
    _HAVE_NUMBA = False

if _HAVE_NUMBA:
    @njit(parallel=True, cache=True)
    def _bilateral_fwd_kernel(img, sigma_d, sigma_r, r):
        h, w, _ = img.shape
        out = np.empty_like(img)
        den = np.empty((h, w), dtype=img.dtype)
        for i in prange(h):
            for j in range(w):
                inv_sd = 1.0 / (2.0 * sigma_d[i, j] * sigma_d[i, j])
                inv_sr = 1.0 / (2.0 * sigma_r[i, j] * sigma_r[i, j])
                a0 = a1 = a2 = 0.0
                d = 0.0
                for di in range(-r, r + 1):
                    qi = min(max(i + di, 0), h - 1)
                    for dj in range(-r, r + 1):
                        qj = min(max(j + dj, 0), w - 1)
                        cd = 0.0
                        for c in range(3):
                            t = img[i, j, c] - img[qi, qj, c]
                            cd += t * t
                        wgt = np.exp(-(di * di + dj * dj) * inv_sd - cd * inv_sr)
                        d += wgt
                        a0 += wgt * img[qi, qj, 0]
                        a1 += wgt * img[qi, qj, 1]
                        a2 += wgt * img[qi, qj, 2]
                out[i, j, 0] = a0 / d
                out[i, j, 1] = a1 / d
                out[i, j, 2] = a2 / d
                den[i, j] = d
        return out, den

    @njit(parallel=True, cache=True)
    def _bilateral_mask_grad_kernel(img, sigma_d, sigma_r, r, out, den, g):
        h, w, _ = img.shape
        cot_sd = np.zeros((h, w), dtype=img.dtype)
        cot_sr = np.zeros((h, w), dtype=img.dtype)
        for i in prange(h):
            for j in range(w):
                sd = sigma_d[i, j]
                sr = sigma_r[i, j]
                inv_sd = 1.0 / (2.0 * sd * sd)
                inv_sr = 1.0 / (2.0 * sr * sr)
                acc_sd = 0.0
                acc_sr = 0.0
                for di in range(-r, r + 1):
                    qi = min(max(i + di, 0), h - 1)
                    for dj in range(-r, r + 1):
                        qj = min(max(j + dj, 0), w - 1)
                        cd = 0.0
                        dot = 0.0
                        for c in range(3):
                            t = img[i, j, c] - img[qi, qj, c]
                            cd += t * t
                            dot += g[i, j, c] * (img[qi, qj, c] - out[i, j, c])
                        wgt = np.exp(-(di * di + dj * dj) * inv_sd - cd * inv_sr)
                        cot_w = dot / den[i, j]
                        acc_sd += cot_w * wgt * (di * di + dj * dj)
                        acc_sr += cot_w * wgt * cd
                cot_sd[i, j] = acc_sd / sd ** 3
                cot_sr[i, j] = acc_sr / sr ** 3
        return cot_sd, cot_sr


def bilateral_forward(img, sigma_d, sigma_r, radius):
    if _HAVE_NUMBA:
        out, den = _bilateral_fwd_kernel(
            np.ascontiguousarray(img), np.ascontiguousarray(sigma_d),
            np.ascontiguousarray(sigma_r), radius)
    else:
        out, den = _bilateral_forward_numpy(img, sigma_d, sigma_r, radius)
    aux = dict(img=img, out=out, den=den, sigma_d=sigma_d, sigma_r=sigma_r,
               radius=radius)
    return out, aux


def _bilateral_forward_numpy(img, sigma_d, sigma_r, radius):
    h, w = img.shape[:2]
    r = radius
    ip = np.pad(img, ((r, r), (r, r), (0, 0)), mode="edge")
    inv_2sd2 = 1.0 / (2.0 * sigma_d ** 2)
    inv_2sr2 = 1.0 / (2.0 * sigma_r ** 2)
    num = np.zeros_like(img)
    den = np.zeros((h, w), dtype=img.dtype)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            shifted = ip[r + dy:r + dy + h, r + dx:r + dx + w]
            cdist = ((img - shifted) ** 2).sum(axis=-1)
            wk = np.exp(-(dy * dy + dx * dx) * inv_2sd2 - cdist * inv_2sr2)
            num += wk[:, :, None] * shifted
            den += wk
    return num / den[:, :, None], den


def bilateral_backward(aux, g, need_input_grad):
    img, out, den = aux["img"], aux["out"], aux["den"]
    sigma_d, sigma_r, r = aux["sigma_d"], aux["sigma_r"], aux["radius"]
    if _HAVE_NUMBA and not need_input_grad:
        cot_sd, cot_sr = _bilateral_mask_grad_kernel(
            np.ascontiguousarray(img), np.ascontiguousarray(sigma_d),
            np.ascontiguousarray(sigma_r), r,
            np.ascontiguousarray(out), den, np.ascontiguousarray(g))
        return None, {"sigma_d": cot_sd, "sigma_r": cot_sr}

    h, w = img.shape[:2]
    ip = np.pad(img, ((r, r), (r, r), (0, 0)), mode="edge")
    inv_2sd2 = 1.0 / (2.0 * sigma_d ** 2)
    inv_2sr2 = 1.0 / (2.0 * sigma_r ** 2)
    inv_sr2 = 1.0 / sigma_r ** 2
    cot_sd = np.zeros((h, w), dtype=img.dtype)
    cot_sr = np.zeros((h, w), dtype=img.dtype)
    cot_ip = np.zeros_like(ip) if need_input_grad else None
    cot_center = np.zeros_like(img) if need_input_grad else None
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            shifted = ip[r + dy:r + dy + h, r + dx:r + dx + w]
            cdist = ((img - shifted) ** 2).sum(axis=-1)
            wk = np.exp(-(dy * dy + dx * dx) * inv_2sd2 - cdist * inv_2sr2)
            # d out / d w = (shifted - out) / den
            cot_w = (g * (shifted - out)).sum(axis=-1) / den
            cot_sd += cot_w * wk * (dy * dy + dx * dx) / sigma_d ** 3
            cot_sr += cot_w * wk * cdist / sigma_r ** 3
            if need_input_grad:
                diff = img - shifted
                common = (cot_w * wk * inv_sr2)[:, :, None]
                cot_ip[r + dy:r + dy + h, r + dx:r + dx + w] += \
                    (wk / den)[:, :, None] * g + common * diff
                cot_center -= common * diff
    cot_img = None
    if need_input_grad:
        cot_img = _fold_pad(cot_ip, r) + cot_center
    return cot_img, {"sigma_d": cot_sd, "sigma_r": cot_sr}


def _fold_pad(arr, r):
    """Adjoint of edge padding: sum pad rows/cols back onto the borders."""
    arr = arr.copy()
    arr[r] += arr[:r].sum(axis=0)
    arr[-r - 1] += arr[-r:].sum(axis=0)
    core = arr[r:-r]
    core[:, r] += core[:, :r].sum(axis=1)
    core[:, -r - 1] += core[:, -r:].sum(axis=1)
    return core[:, r:-r].copy()


def xdog_forward(img, amount, opacity, cfg: XdogConfig):
    L = luminance(img)
    se = cfg.sigma_e
    g1 = gaussian_blur(L, se, _auto_radius(se))
    g2 = gaussian_blur(L, cfg.k * se, _auto_radius(cfg.k * se))
    u = (1.0 + cfg.tau) * g1 - cfg.tau * g2
    below = u < cfg.epsilon
    t = np.tanh(cfg.phi * (u - cfg.epsilon))
    edge = np.where(below, 1.0 + t, 1.0)
    dedge_du = np.where(below, cfg.phi * (1.0 - t * t), 0.0)
    c_raw = amount * (1.0 - edge)
    contour = np.minimum(c_raw, 1.0)       # c_raw >= 0 by construction
    factor = 1.0 - opacity * contour
    out = img * factor[:, :, None]
    aux = dict(img=img, amount=amount, opacity=opacity, cfg=cfg, u=u, edge=edge,
               dedge_du=dedge_du, c_raw=c_raw, contour=contour, factor=factor)
    return out, aux


def xdog_backward(aux, g, need_input_grad):
    img, cfg = aux["img"], aux["cfg"]
    gdotimg = (g * img).sum(axis=-1)
    cot_opacity = -gdotimg * aux["contour"]
    cot_contour = -gdotimg * aux["opacity"]
    cot_craw = cot_contour * (aux["c_raw"] < 1.0)
    cot_amount = cot_craw * (1.0 - aux["edge"])
    cot_u = -cot_craw * aux["amount"] * aux["dedge_du"]
    se = cfg.sigma_e
    cot_L = (1.0 + cfg.tau) * gaussian_blur_adjoint(cot_u, se, _auto_radius(se)) \
        - cfg.tau * gaussian_blur_adjoint(cot_u, cfg.k * se, _auto_radius(cfg.k * se))
    cot_img = g * aux["factor"][:, :, None] + luminance_adjoint(cot_L)
    return cot_img, {"amount": cot_amount, "opacity": cot_opacity}


def bump_phong_forward(img, scale, specular, opacity, cfg: BumpConfig):
    lx, ly, lz = (float(v) for v in cfg.light_dir)
    alpha = cfg.shininess
    L = luminance(img)
    hs = cfg.height_sigma
    height = gaussian_blur(L, hs, _auto_radius(hs))
    hx, hy = central_gradients(height)
    a = -scale * hx
    b = -scale * hy
    minv = 1.0 / np.sqrt(a * a + b * b + 1.0)
    u = a * lx + b * ly + lz
    ndotl = u * minv
    diffuse = np.maximum(ndotl, 0.0) / lz
    rz = 2.0 * u * minv * minv - lz           # reflected light dot view (0,0,1)
    rz_pos = np.maximum(rz, 0.0)
    spec_base = rz_pos ** alpha
    shade = 1.0 - opacity + opacity * diffuse
    out = img * shade[:, :, None] + (opacity * specular * spec_base)[:, :, None]
    aux = dict(img=img, scale=scale, specular=specular, opacity=opacity, cfg=cfg,
               hx=hx, hy=hy, a=a, b=b, minv=minv, u=u, ndotl=ndotl,
               diffuse=diffuse, rz=rz, rz_pos=rz_pos, spec_base=spec_base,
               shade=shade)
    return out, aux


def bump_phong_backward(aux, g, need_input_grad):
    cfg = aux["cfg"]
    lx, ly, lz = (float(v) for v in cfg.light_dir)
    alpha = cfg.shininess
    img = aux["img"]
    opacity, specular, scale = aux["opacity"], aux["specular"], aux["scale"]
    minv, u = aux["minv"], aux["u"]
    gsum = g.sum(axis=-1)
    gdotimg = (g * img).sum(axis=-1)

    cot_opacity = gdotimg * (aux["diffuse"] - 1.0) + specular * aux["spec_base"] * gsum
    cot_spec = opacity * aux["spec_base"] * gsum
    cot_d = opacity * gdotimg
    cot_sb = opacity * specular * gsum

    gate_d = (aux["ndotl"] > 0).astype(img.dtype)
    gate_r = (aux["rz"] > 0).astype(img.dtype)
    cot_rz = cot_sb * alpha * aux["rz_pos"] ** (alpha - 1.0) * gate_r
    cot_u = cot_d * gate_d * minv / lz + cot_rz * 2.0 * minv * minv
    cot_minv = cot_d * gate_d * u / lz + cot_rz * 4.0 * u * minv
    dminv = -cot_minv * minv ** 3                       # d minv/da = -a*minv^3
    cot_a = cot_u * lx + dminv * aux["a"]
    cot_b = cot_u * ly + dminv * aux["b"]
    cot_scale = cot_a * (-aux["hx"]) + cot_b * (-aux["hy"])

    cot_height = central_gradients_adjoint(-scale * cot_a, -scale * cot_b)
    hs = cfg.height_sigma
    cot_L = gaussian_blur_adjoint(cot_height, hs, _auto_radius(hs))
    cot_img = g * aux["shade"][:, :, None] + luminance_adjoint(cot_L)
    return cot_img, {"scale": cot_scale, "specular": cot_spec,
                     "opacity": cot_opacity}


def local_contrast_forward(img, contrast, mean_sigma):
    L = luminance(img)
    mu = gaussian_blur(L, mean_sigma, _auto_radius(mean_sigma))
    denom = np.maximum(L, 1e-4)
    pre = 1.0 + contrast * (L - mu) / denom
    gain = np.maximum(pre, 0.0)
    out = img * gain[:, :, None]
    aux = dict(img=img, contrast=contrast, mean_sigma=mean_sigma, L=L, mu=mu,
               denom=denom, pre=pre, gain=gain)
    return out, aux


def local_contrast_backward(aux, g, need_input_grad):
    img, contrast = aux["img"], aux["contrast"]
    L, mu, denom = aux["L"], aux["mu"], aux["denom"]
    gdotimg = (g * img).sum(axis=-1)
    gate = (aux["pre"] > 0).astype(img.dtype)
    cot_pre = gdotimg * gate
    cot_contrast = cot_pre * (L - mu) / denom
    cot_mu = -cot_pre * contrast / denom
    ms = aux["mean_sigma"]
    cot_L = cot_pre * contrast * (1.0 / denom
                                  - (L - mu) / denom ** 2 * (L > 1e-4)) \
        + gaussian_blur_adjoint(cot_mu, ms, _auto_radius(ms))
    cot_img = g * aux["gain"][:, :, None] + luminance_adjoint(cot_L)
    return cot_img, {"contrast": cot_contrast}


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

def pipeline_forward(abstraction, ranged_masks, cfg: PipelineConfig):
    """Run all enabled filters on the abstraction image.

    ``ranged_masks`` maps the 8 mask names to (H, W) arrays in parameter
    units. Returns (output clamped to [0,1], tape) where the tape feeds
    :func:`pipeline_backward`.
    """
    img = validate_image(abstraction, channels=3)
    h, w = img.shape[:2]
    for name in MASK_NAMES:
        if ranged_masks[name].shape != (h, w):
            raise InvalidArgument(f"mask {name} does not match image dimensions")
    tape = []
    x = gaussian_blur(img, cfg.pre_smooth_sigma, cfg.pre_smooth_radius)
    tape.append(("presmooth", dict(sigma=cfg.pre_smooth_sigma,
                                   radius=cfg.pre_smooth_radius)))
    if cfg.enabled.get("bilateral", True):
        x, aux = bilateral_forward(x, ranged_masks["bilateral_sigma_d"],
                                   ranged_masks["bilateral_sigma_r"],
                                   cfg.bilateral_radius)
        tape.append(("bilateral", aux))
    if cfg.enabled.get("xdog", True):
        x, aux = xdog_forward(x, ranged_masks["contour_amount"],
                              ranged_masks["contour_opacity"], cfg.xdog)
        tape.append(("xdog", aux))
    if cfg.enabled.get("bump", True):
        x, aux = bump_phong_forward(x, ranged_masks["bump_scale"],
                                    ranged_masks["phong_specular"],
                                    ranged_masks["bump_opacity"], cfg.bump)
        tape.append(("bump", aux))
    if cfg.enabled.get("contrast", True):
        x, aux = local_contrast_forward(x, ranged_masks["contrast"],
                                        cfg.contrast_mean_sigma)
        tape.append(("contrast", aux))
    gate = ((x >= 0.0) & (x <= 1.0)).astype(x.dtype)
    out = np.clip(x, 0.0, 1.0)
    tape.append(("clamp", dict(gate=gate, pre=x)))
    return out, tape


_BACKWARD = {
    "bilateral": (bilateral_backward,
                  {"sigma_d": "bilateral_sigma_d", "sigma_r": "bilateral_sigma_r"}),
    "xdog": (xdog_backward,
             {"amount": "contour_amount", "opacity": "contour_opacity"}),
    "bump": (bump_phong_backward,
             {"scale": "bump_scale", "specular": "phong_specular",
              "opacity": "bump_opacity"}),
    "contrast": (local_contrast_backward, {"contrast": "contrast"}),
}


def pipeline_backward(tape, cot_out, need_input_grad=False):
    """Walk the tape in reverse; returns (cot_abstraction or None, mask cots).

    Mask cotangents are in ranged parameter units, keyed by mask name.
    """
    mask_cots = {}
    g = cot_out
    for stage, aux in reversed(tape):
        if stage == "clamp":
            g = g * aux["gate"]
        elif stage == "presmooth":
            if need_input_grad:
                g = gaussian_blur_adjoint(g, aux["sigma"], aux["radius"])
            else:
                g = None
        else:
            backward, name_map = _BACKWARD[stage]
            need_img = need_input_grad if stage == "bilateral" else True
            cot_img, cots = backward(aux, g, need_img)
            for local, full in name_map.items():
                mask_cots[full] = cots[local]
            g = cot_img
    return (g if need_input_grad else None), mask_cots


def apply_pipeline(abstraction, masks: ParameterMaskSet, cfg: PipelineConfig):
    """Stylized output for an abstraction image and a mask set."""
    out, _ = pipeline_forward(abstraction, masks.ranged_all(), cfg)
    return out


def smoothness_margins(tape, out, target=None):
    """Distance of each recorded gate/kink from its switching point.

    Used by the gradient checker to confirm probes sit on smooth ground:
    finite differences only match analytic gradients when no gate flips
    within the probe step.
    """
    margins = {}
    for stage, aux in tape:
        if stage == "xdog":
            margins["xdog_threshold"] = float(np.abs(aux["u"] - aux["cfg"].epsilon).min())
            margins["xdog_clamp"] = float(np.abs(aux["c_raw"] - 1.0).min())
        elif stage == "bump":
            margins["bump_diffuse"] = float(np.abs(aux["ndotl"]).min())
            margins["bump_specular"] = float(np.abs(aux["rz"]).min())
        elif stage == "contrast":
            margins["contrast_gain"] = float(np.abs(aux["pre"]).min())
            margins["contrast_floor"] = float(np.abs(aux["L"] - 1e-4).min())
        elif stage == "clamp":
            pre = aux["pre"]
            margins["clamp"] = float(np.minimum(np.abs(pre), np.abs(1.0 - pre)).min())
    if target is not None:
        margins["l1_residual"] = float(np.abs(out - target).min())
    return margins
