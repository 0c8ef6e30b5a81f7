"""Image tensors and the differentiable primitives the filter pipeline is built from.

Images are plain numpy arrays: ``(H, W)`` float for single-channel data and
``(H, W, 3)`` for RGB, nominally in [0, 1] (intermediates may exceed it).
Every primitive comes with a hand-derived adjoint (vector-Jacobian product)
so gradients can be chained without a general autodiff tape.

Border policy is clamp-to-edge replication throughout.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

REC709_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])


class InvalidArgument(ValueError):
    """Raised when an operation's preconditions are violated."""


def validate_image(img: np.ndarray, channels: int | None = None) -> np.ndarray:
    """Check shape/finiteness invariants of an image array and return it."""
    img = np.asarray(img)
    if img.ndim == 2:
        c = 1
    elif img.ndim == 3 and img.shape[2] == 3:
        c = 3
    else:
        raise InvalidArgument(f"expected (H,W) or (H,W,3) image, got shape {img.shape}")
    if channels is not None and c != channels:
        raise InvalidArgument(f"expected {channels}-channel image, got {c}")
    if not np.issubdtype(img.dtype, np.floating):
        raise InvalidArgument(f"expected float image, got dtype {img.dtype}")
    if not np.all(np.isfinite(img)):
        raise InvalidArgument("image contains NaN/Inf")
    return img


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """1-D Gaussian taps on [-radius, radius], normalized to sum 1."""
    if sigma <= 0:
        raise InvalidArgument(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise InvalidArgument(f"radius must be >= 1, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders.

    Differentiable w.r.t. ``img``; the adjoint is :func:`gaussian_blur_adjoint`.
    """
    img = validate_image(img)
    k = gaussian_kernel(sigma, radius).astype(img.dtype)
    out = correlate1d(img, k, axis=0, mode="nearest")
    out = correlate1d(out, k, axis=1, mode="nearest")
    return out


def _blur_axis_adjoint(g: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    # Forward along one axis is y = V(E x): edge-extend by r, then valid
    # correlation. Adjoint: zero-pad, same-correlate (kernel symmetric), then
    # fold the r pad entries back onto the border samples.
    r = len(kernel) // 2
    n = g.shape[axis]
    pad = [(0, 0)] * g.ndim
    pad[axis] = (r, r)
    z = correlate1d(np.pad(g, pad), kernel, axis=axis, mode="constant", cval=0.0)

    def sl(a, b):
        s = [slice(None)] * g.ndim
        s[axis] = slice(a, b)
        return tuple(s)

    out = z[sl(r, n + r)].copy()
    out[sl(0, 1)] += z[sl(0, r)].sum(axis=axis, keepdims=True)
    out[sl(n - 1, n)] += z[sl(n + r, n + 2 * r)].sum(axis=axis, keepdims=True)
    return out


def gaussian_blur_adjoint(cot: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """VJP of :func:`gaussian_blur` w.r.t. its input image."""
    k = gaussian_kernel(sigma, radius).astype(cot.dtype)
    out = _blur_axis_adjoint(cot, k, axis=1)
    out = _blur_axis_adjoint(out, k, axis=0)
    return out


def central_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients (dx, dy) of a single-channel image.

    dx[i,j] = (img[i,j+1] - img[i,j-1]) / 2 with clamp-to-edge borders.
    """
    img = validate_image(img, channels=1)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise InvalidArgument("image must be at least 3x3")
    xe = np.pad(img, ((0, 0), (1, 1)), mode="edge")
    ye = np.pad(img, ((1, 1), (0, 0)), mode="edge")
    dx = (xe[:, 2:] - xe[:, :-2]) * 0.5
    dy = (ye[2:, :] - ye[:-2, :]) * 0.5
    return dx, dy


def central_gradients_adjoint(cot_dx: np.ndarray, cot_dy: np.ndarray) -> np.ndarray:
    """VJP of :func:`central_gradients`: scatter the stencil back, fold borders."""
    h, w = cot_dx.shape
    acc = np.zeros((h, w + 2), dtype=cot_dx.dtype)
    acc[:, 2:] += cot_dx * 0.5
    acc[:, :-2] -= cot_dx * 0.5
    out = acc[:, 1:-1].copy()
    out[:, 0] += acc[:, 0]
    out[:, -1] += acc[:, -1]

    acc = np.zeros((h + 2, w), dtype=cot_dy.dtype)
    acc[2:, :] += cot_dy * 0.5
    acc[:-2, :] -= cot_dy * 0.5
    out2 = acc[1:-1, :].copy()
    out2[0, :] += acc[0, :]
    out2[-1, :] += acc[-1, :]
    return out + out2


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 709 luma of an RGB image: 0.2126 R + 0.7152 G + 0.0722 B."""
    img = validate_image(img, channels=3)
    return img @ REC709_WEIGHTS.astype(img.dtype)


def luminance_adjoint(cot: np.ndarray) -> np.ndarray:
    """VJP of :func:`luminance`: broadcast the weights back onto channels."""
    return cot[:, :, None] * REC709_WEIGHTS.astype(cot.dtype)


def clamp01(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clamp to [0,1]; returns (clamped, pass-through gate for the adjoint)."""
    gate = ((img >= 0.0) & (img <= 1.0)).astype(img.dtype)
    return np.clip(img, 0.0, 1.0), gate


def check_gradients(f, x, analytic, probe_count=20, step=1e-5,
                    rng=None, probe_mask=None):
    """Max relative error between an analytic gradient and central differences.

    ``f`` maps an array like ``x`` to a scalar; ``analytic`` is the claimed
    gradient of ``f`` at ``x``. ``probe_count`` entries are perturbed (drawn
    from ``probe_mask`` when given, so callers can avoid non-smooth loci).
    """
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    rng = np.random.default_rng(rng)
    flat = np.arange(x.size)
    if probe_mask is not None:
        flat = flat[np.asarray(probe_mask).ravel()]
        if flat.size == 0:
            raise InvalidArgument("probe mask excludes every entry")
    idx = rng.choice(flat, size=min(probe_count, flat.size), replace=False)

    worst = 0.0
    for i in idx:
        xp = x.copy().ravel()
        xp[i] += step
        fp = f(xp.reshape(x.shape))
        xm = x.copy().ravel()
        xm[i] -= step
        fm = f(xm.reshape(x.shape))
        fd = (fp - fm) / (2.0 * step)
        a = analytic.ravel()[i]
        worst = max(worst, abs(a - fd) / (abs(a) + 1e-8))
    return worst


def check_op_gradients(forward, vjp, x, probe_count=20, step=1e-5, rng=None):
    """Gradient-check a tensor-valued op through a random fixed cotangent.

    Scalarizes via g(x) = <u, forward(x)> with u drawn once, whose exact
    gradient is vjp(x, u).
    """
    rng = np.random.default_rng(rng)
    y0 = forward(np.asarray(x, dtype=np.float64))
    u = rng.standard_normal(np.shape(y0))
    analytic = vjp(np.asarray(x, dtype=np.float64), u)
    return check_gradients(lambda z: float(np.sum(u * forward(z))), x, analytic,
                           probe_count=probe_count, step=step, rng=rng)
