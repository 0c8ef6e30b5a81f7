import numpy as np
import pytest

from texweave.pipeline import (
    DEFAULT_RANGES,
    FILTER_MASKS,
    FILTER_NAMES,
    MASK_NAMES,
    ParameterMaskSet,
    PipelineConfig,
    ablation_config,
    apply_pipeline,
    bilateral_backward,
    bilateral_forward,
    bump_phong_backward,
    bump_phong_forward,
    local_contrast_backward,
    local_contrast_forward,
    pipeline_backward,
    pipeline_forward,
    smoothness_margins,
    xdog_backward,
    xdog_forward,
)
from texweave.tensor import InvalidArgument, check_gradients


def _mid_masks(h, w, dtype=np.float64):
    return ParameterMaskSet.initialize(h, w, dtype=dtype)


def test_mask_set_initializes_at_range_midpoints():
    masks = _mid_masks(4, 5)
    for name, (lo, hi) in DEFAULT_RANGES.items():
        assert np.allclose(masks.ranged(name), (lo + hi) / 2.0)
        assert np.allclose(masks.normalized(name), 0.5)


def test_set_ranged_round_trips(rng):
    masks = _mid_masks(6, 6)
    for name, (lo, hi) in DEFAULT_RANGES.items():
        span = hi - lo
        values = lo + span * rng.uniform(0.05, 0.95, size=(6, 6))
        masks.set_ranged(name, values)
        assert np.max(np.abs(masks.ranged(name) - values)) < 1e-9 * max(1, span)


def test_set_ranged_clamps_and_rejects_unknown_names():
    masks = _mid_masks(4, 4)
    masks.set_ranged("contrast", np.full((4, 4), 99.0))
    lo, hi = DEFAULT_RANGES["contrast"]
    assert np.all(masks.ranged("contrast") <= hi)
    with pytest.raises(InvalidArgument):
        masks.set_ranged("nope", np.zeros((4, 4)))


def _bilateral_oracle(img, sigma_d, sigma_r, r):
    """Brute-force double loop; window sigmas read at the center pixel."""
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            sd, sr = sigma_d[y, x], sigma_r[y, x]
            num = np.zeros(3)
            den = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    diff = img[yy, xx] - img[y, x]
                    wgt = np.exp(-(dy * dy + dx * dx) / (2 * sd * sd)
                                 - float(diff @ diff) / (2 * sr * sr))
                    num += wgt * img[yy, xx]
                    den += wgt
            out[y, x] = num / den
    return out


def test_bilateral_matches_brute_force_oracle(rng):
    img = rng.random((8, 6, 3))
    sd = rng.uniform(0.5, 2.5, size=(8, 6))
    sr = rng.uniform(0.1, 0.8, size=(8, 6))
    out, _aux = bilateral_forward(img, sd, sr, 2)
    assert np.max(np.abs(out - _bilateral_oracle(img, sd, sr, 2))) < 1e-12


def test_bilateral_numba_and_numpy_paths_agree(rng):
    from texweave.pipeline import _bilateral_forward_numpy

    img = rng.random((9, 7, 3)).astype(np.float64)
    sd = rng.uniform(0.5, 2.5, size=(9, 7))
    sr = rng.uniform(0.1, 0.8, size=(9, 7))
    fast, _ = bilateral_forward(img, sd, sr, 3)
    slow, _ = _bilateral_forward_numpy(img, sd, sr, 3)
    assert np.max(np.abs(fast - slow)) < 1e-13


def _filter_mask_grad_check(forward, backward, mask_values, which, key, rng):
    """FD-check the gradient w.r.t. one parameter mask via a random loss."""
    out0, aux = forward(*mask_values)
    u = rng.standard_normal(out0.shape)

    def loss(m):
        vals = list(mask_values)
        vals[which] = m
        return float(np.sum(u * forward(*vals)[0]))

    _, cots = backward(aux, u, False)
    return check_gradients(loss, mask_values[which], cots[key], rng=rng)


def test_bilateral_mask_gradients(rng):
    img = rng.random((7, 6, 3))
    sd = rng.uniform(0.5, 2.5, size=(7, 6))
    sr = rng.uniform(0.1, 0.8, size=(7, 6))
    fwd = lambda a, b: bilateral_forward(img, a, b, 2)
    assert _filter_mask_grad_check(fwd, bilateral_backward,
                                   [sd, sr], 0, "sigma_d", rng) < 1e-4
    assert _filter_mask_grad_check(fwd, bilateral_backward,
                                   [sd, sr], 1, "sigma_r", rng) < 1e-4


def test_xdog_mask_gradients(rng):
    cfg = PipelineConfig().xdog
    img = rng.random((10, 8, 3))
    amount = rng.uniform(0.2, 1.8, size=(10, 8))
    opacity = rng.uniform(0.1, 0.9, size=(10, 8))
    fwd = lambda a, o: xdog_forward(img, a, o, cfg)
    assert _filter_mask_grad_check(fwd, xdog_backward,
                                   [amount, opacity], 0, "amount", rng) < 1e-4
    assert _filter_mask_grad_check(fwd, xdog_backward,
                                   [amount, opacity], 1, "opacity", rng) < 1e-4


def test_bump_mask_gradients(rng):
    cfg = PipelineConfig().bump
    img = rng.random((9, 9, 3))
    scale = rng.uniform(0.5, 4.5, size=(9, 9))
    spec = rng.uniform(0.1, 0.9, size=(9, 9))
    opac = rng.uniform(0.1, 0.9, size=(9, 9))
    fwd = lambda s, p, o: bump_phong_forward(img, s, p, o, cfg)
    for which, key in enumerate(("scale", "specular", "opacity")):
        err = _filter_mask_grad_check(fwd, bump_phong_backward,
                                      [scale, spec, opac], which, key, rng)
        assert err < 1e-4, key


def test_contrast_mask_gradient(rng):
    img = rng.random((8, 8, 3))
    contrast = rng.uniform(0.2, 1.8, size=(8, 8))
    fwd = lambda c: local_contrast_forward(img, c, 4.0)
    assert _filter_mask_grad_check(fwd, local_contrast_backward,
                                   [contrast], 0, "contrast", rng) < 1e-4


def test_filter_input_gradients(rng):
    """VJPs w.r.t. the image input, each filter (bilateral uses numpy path)."""
    from texweave.tensor import check_op_gradients

    img = rng.random((7, 7, 3))
    cfg = PipelineConfig()
    sd = rng.uniform(0.8, 2.0, size=(7, 7))
    sr = rng.uniform(0.2, 0.8, size=(7, 7))
    amount = rng.uniform(0.3, 1.5, size=(7, 7))
    opac = rng.uniform(0.2, 0.8, size=(7, 7))
    scale = rng.uniform(0.5, 3.0, size=(7, 7))
    contrast = rng.uniform(0.3, 1.7, size=(7, 7))

    cases = [
        (lambda x: bilateral_forward(x, sd, sr, 2)[0],
         lambda x, u: bilateral_backward(
             bilateral_forward(x, sd, sr, 2)[1], u, True)[0]),
        (lambda x: xdog_forward(x, amount, opac, cfg.xdog)[0],
         lambda x, u: xdog_backward(
             xdog_forward(x, amount, opac, cfg.xdog)[1], u, True)[0]),
        (lambda x: bump_phong_forward(x, scale, opac, opac, cfg.bump)[0],
         lambda x, u: bump_phong_backward(
             bump_phong_forward(x, scale, opac, opac, cfg.bump)[1], u, True)[0]),
        (lambda x: local_contrast_forward(x, contrast, 4.0)[0],
         lambda x, u: local_contrast_backward(
             local_contrast_forward(x, contrast, 4.0)[1], u, True)[0]),
    ]
    for i, (fwd, vjp) in enumerate(cases):
        assert check_op_gradients(fwd, vjp, img, rng=i) < 5e-4, i


def test_pipeline_output_in_unit_range(rng):
    img = rng.random((16, 16, 3)).astype(np.float32)
    masks = ParameterMaskSet.initialize(16, 16, dtype=np.float32)
    out = apply_pipeline(img, masks, PipelineConfig())
    assert out.shape == img.shape
    assert out.min() >= 0.0 and out.max() <= 1.0


def _masks_grad_dict(backward, aux, u):
    return backward(aux, u, False)[1]


def test_pipeline_backward_covers_active_masks(rng):
    img = rng.random((12, 12, 3))
    cfg = PipelineConfig()
    masks = ParameterMaskSet.initialize(12, 12, dtype=np.float64)
    out, tape = pipeline_forward(img, masks.ranged_all(), cfg)
    _, grads = pipeline_backward(tape, np.ones_like(out))
    assert set(grads) == set(MASK_NAMES)
    for name in MASK_NAMES:
        assert grads[name].shape == (12, 12)
        assert np.isfinite(grads[name]).all()


def test_ablation_config_disables_filter_and_masks():
    for name in FILTER_NAMES:
        cfg = ablation_config(name)
        assert cfg.enabled[name] is False
        active = cfg.active_masks()
        for m in FILTER_MASKS[name]:
            assert m not in active
    with pytest.raises(InvalidArgument):
        ablation_config("nonsense")


def test_ablated_pipeline_skips_stage(rng):
    img = rng.random((10, 10, 3))
    masks = ParameterMaskSet.initialize(10, 10, dtype=np.float64)
    for name in FILTER_NAMES:
        _, tape = pipeline_forward(img, masks.ranged_all(),
                                   ablation_config(name))
        stages = [s for s, _ in tape]
        assert name not in stages
        assert set(stages) < {"presmooth", "clamp"} | set(FILTER_NAMES)
    # bilateral at non-degenerate sigmas visibly smooths a noisy image
    full = apply_pipeline(img, masks, PipelineConfig())
    no_bilateral = apply_pipeline(img, masks, ablation_config("bilateral"))
    assert not np.allclose(full, no_bilateral)


def test_hue_preserved_by_xdog_bump_contrast(rng):
    """xdog/bump/contrast scale RGB uniformly except for the additive
    specular term, so hue survives wherever the specular term is dark."""
    import colorsys

    img = rng.random((24, 24, 3))
    masks = ParameterMaskSet.initialize(24, 24, dtype=np.float64)
    cfg = PipelineConfig(enabled={"bilateral": False, "xdog": True,
                                  "bump": True, "contrast": True})
    out, tape = pipeline_forward(img, masks.ranged_all(), cfg)
    aux = dict(tape)
    pre_clamp = aux["clamp"]["pre"]
    unclamped = np.all((pre_clamp >= 0) & (pre_clamp <= 1), axis=-1)
    # the contrast relu can zero a pixel entirely; black has no hue
    unclamped &= aux["contrast"]["gain"] > 1e-6
    # after the pre-smooth every stage maps c -> s*c + t*(1,1,1); the input
    # of the hue comparison is therefore the pre-smoothed image
    from texweave.tensor import gaussian_blur
    base = gaussian_blur(img, cfg.pre_smooth_sigma, cfg.pre_smooth_radius)
    checked = 0
    for y in range(24):
        for x in range(24):
            if not unclamped[y, x]:
                continue
            h0 = colorsys.rgb_to_hsv(*base[y, x])[0]
            h1 = colorsys.rgb_to_hsv(*out[y, x])[0]
            d = abs(h0 - h1)
            assert min(d, 1 - d) < 1e-5, (y, x)
            checked += 1
    assert checked > 100


def test_smoothness_margins_keys(rng):
    img = rng.random((10, 10, 3))
    masks = ParameterMaskSet.initialize(10, 10, dtype=np.float64)
    out, tape = pipeline_forward(img, masks.ranged_all(), PipelineConfig())
    margins = smoothness_margins(tape, out, target=img)
    expected = {"xdog_threshold", "xdog_clamp", "bump_diffuse",
                "bump_specular", "contrast_gain", "contrast_floor",
                "clamp", "l1_residual"}
    assert expected <= set(margins)
    assert all(isinstance(v, float) and v >= 0 for v in margins.values())
