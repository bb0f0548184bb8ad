"""SSIM maps and the clamped photometric error used across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Wang et al. stabilization constants for unit dynamic range.
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


class DimensionError(ValueError):
    """Image shapes do not agree."""


@dataclass
class ErrorMap:
    """Per-pixel photometric error in [0, 1].

    Invalid pixels carry value 1.0 but must be ignored by any consumer
    that understands the validity mask.
    """

    values: np.ndarray
    valid: np.ndarray


def _box_sum3(a: np.ndarray) -> np.ndarray:
    """Sum over each 3x3 neighborhood with zero padding (2-D arrays).

    Self-adjoint for the centered window, which the SSIM backward pass
    relies on.
    """
    p = np.pad(a, 1, mode="constant")
    return (
        p[:-2, :-2]
        + p[:-2, 1:-1]
        + p[:-2, 2:]
        + p[1:-1, :-2]
        + p[1:-1, 1:-1]
        + p[1:-1, 2:]
        + p[2:, :-2]
        + p[2:, 1:-1]
        + p[2:, 2:]
    )


def _channels(image: np.ndarray) -> list[np.ndarray]:
    img = np.asarray(image, dtype=float)
    if img.ndim == 2:
        return [img]
    if img.ndim == 3:
        return [img[..., c] for c in range(img.shape[2])]
    raise DimensionError(f"image must be 2-D or 3-D, got ndim={img.ndim}")


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise DimensionError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")


def _ssim_channel_stats(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> dict:
    n = _box_sum3(weights)
    ns = np.maximum(n, 1.0)
    ma = _box_sum3(weights * a) / ns
    mb = _box_sum3(weights * b) / ns
    maa = _box_sum3(weights * a * a) / ns
    mbb = _box_sum3(weights * b * b) / ns
    mab = _box_sum3(weights * a * b) / ns
    va = maa - ma * ma
    vb = mbb - mb * mb
    cab = mab - ma * mb
    a1 = 2.0 * ma * mb + SSIM_C1
    a2 = 2.0 * cab + SSIM_C2
    b1 = ma * ma + mb * mb + SSIM_C1
    b2 = va + vb + SSIM_C2
    return {
        "n": n,
        "ns": ns,
        "ma": ma,
        "mb": mb,
        "a1": a1,
        "a2": a2,
        "b1": b1,
        "b2": b2,
        "ssim": (a1 * a2) / (b1 * b2),
    }


def ssim_map(a: np.ndarray, b: np.ndarray, valid: np.ndarray | None = None):
    """Per-pixel SSIM between two images on uniform 3x3 windows.

    Window statistics are computed over the in-image (and, when `valid`
    is given, valid) neighbors only, so borders use the shrunken window
    instead of padding. Multi-channel images are averaged over channels.
    The result is clipped to [-1, 1].
    """
    _check_same_shape(a, b)
    ca = _channels(a)
    cb = _channels(b)
    if valid is None:
        weights = np.ones(ca[0].shape)
    else:
        if valid.shape != ca[0].shape:
            raise DimensionError(
                f"validity shape {valid.shape} does not match image {ca[0].shape}"
            )
        weights = valid.astype(float)
    total = np.zeros(ca[0].shape)
    for xa, xb in zip(ca, cb):
        total = total + _ssim_channel_stats(xa, xb, weights)["ssim"]
    return np.clip(total / len(ca), -1.0, 1.0)


def photometric_error_map(
    warped: np.ndarray, key: np.ndarray, valid: np.ndarray | None = None
) -> ErrorMap:
    """(1 - SSIM) / 2 between a warped source and the keyframe, in [0, 1].

    Warp validity is both propagated to the result and used to exclude
    invalid warped pixels from every SSIM window, so border artifacts do
    not leak into their neighbors.
    """
    s = ssim_map(warped, key, valid=valid)
    values = np.clip((1.0 - s) / 2.0, 0.0, 1.0)
    if valid is None:
        out_valid = np.ones(values.shape, dtype=bool)
    else:
        out_valid = valid.copy()
        values = np.where(out_valid, values, 1.0)
    return ErrorMap(values=values, valid=out_valid)


def ssim_map_backward(
    a: np.ndarray,
    b: np.ndarray,
    grad_out: np.ndarray,
    valid: np.ndarray | None = None,
) -> np.ndarray:
    """Adjoint of ssim_map with respect to the first image.

    Given dL/d(ssim map), returns dL/da with the same shape as `a`.
    Gradients are exact away from the [-1, 1] clip, which only binds on
    degenerate (identical-patch) inputs where the true gradient is zero.
    """
    _check_same_shape(a, b)
    ca = _channels(a)
    cb = _channels(b)
    weights = np.ones(ca[0].shape) if valid is None else valid.astype(float)
    g = np.asarray(grad_out, dtype=float) / len(ca)

    grads = []
    for xa, xb in zip(ca, cb):
        st = _ssim_channel_stats(xa, xb, weights)
        ma, mb = st["ma"], st["mb"]
        a1, a2, b1, b2 = st["a1"], st["a2"], st["b1"], st["b2"]
        s = st["ssim"]
        inv_bb = 1.0 / (b1 * b2)
        ds_dma = 2.0 * mb * (a2 - a1) * inv_bb + 2.0 * ma * s * (1.0 / b2 - 1.0 / b1)
        ds_dmaa = -s / b2
        ds_dmab = 2.0 * a1 * inv_bb
        ns = st["ns"]
        ga = _box_sum3(g * ds_dma / ns)
        gaa = _box_sum3(g * ds_dmaa / ns)
        gab = _box_sum3(g * ds_dmab / ns)
        grads.append(weights * (ga + 2.0 * xa * gaa + xb * gab))
    if np.asarray(a).ndim == 3:
        return np.stack(grads, axis=-1)
    return grads[0]


def local_std(image: np.ndarray) -> np.ndarray:
    """Per-pixel intensity std over 3x3 windows (channel-averaged)."""
    acc = None
    for ch in _channels(image):
        n = _box_sum3(np.ones(ch.shape))
        m = _box_sum3(ch) / n
        v = np.maximum(_box_sum3(ch * ch) / n - m * m, 0.0)
        acc = np.sqrt(v) if acc is None else acc + np.sqrt(v)
    return acc / (1 if np.asarray(image).ndim == 2 else np.asarray(image).shape[2])


def textured_mask(image: np.ndarray, min_std: float = 0.01) -> np.ndarray:
    """Pixels with enough local contrast for photometric matching."""
    return local_std(image) > min_std
