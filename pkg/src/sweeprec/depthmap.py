"""Winner-take-all depth extraction, the interpolation-factor
parameterization, and point-cloud generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costvolume import CostVolume, CostVolumeError, DepthRange, depth_steps
from .geometry import Frame, backproject


@dataclass
class InverseDepthMap:
    """Per-pixel inverse depth with a confidence in [0, 1].

    Confidence is 0 exactly where the source volume had no valid
    evidence at any step.
    """

    values: np.ndarray
    confidence: np.ndarray
    drange: DepthRange


@dataclass
class InterpolationFactorMap:
    """Depth parameterized as a factor in [0, 1] between the range bounds."""

    factors: np.ndarray
    drange: DepthRange


def factor_to_inv_depth(fmap: InterpolationFactorMap) -> np.ndarray:
    """Map factors in [0, 1] affinely onto [d_min, d_max]."""
    f = np.asarray(fmap.factors, dtype=float)
    if np.any(f < 0) or np.any(f > 1):
        raise CostVolumeError("interpolation factors must lie in [0, 1]")
    return fmap.drange.d_min + f * (fmap.drange.d_max - fmap.drange.d_min)


def inv_depth_to_factor(values: np.ndarray, drange: DepthRange) -> InterpolationFactorMap:
    """Exact inverse of factor_to_inv_depth."""
    d = np.asarray(values, dtype=float)
    if np.any(d < drange.d_min) or np.any(d > drange.d_max):
        raise CostVolumeError("inverse depths must lie within the depth range")
    f = (d - drange.d_min) / (drange.d_max - drange.d_min)
    return InterpolationFactorMap(factors=np.clip(f, 0.0, 1.0), drange=drange)


def wta_depth(volume: CostVolume) -> InverseDepthMap:
    """Classical winner-take-all depth from a cost volume.

    Picks the per-pixel best-scoring step and refines it with a 3-point
    parabola fit through the neighbors, clamped to the bracket; at range
    boundaries the discrete step is kept. Confidence is affine in the
    peak score, (score + 1) / 2, and forced to 0 (with value d_min)
    where no step ever had valid evidence.
    """
    scores = volume.scores
    h, w, m = scores.shape
    steps = depth_steps(volume.drange)
    best = np.argmax(scores, axis=2)
    rows, cols = np.mgrid[0:h, 0:w]
    peak = scores[rows, cols, best]

    offset = np.zeros((h, w))
    interior = (best > 0) & (best < m - 1)
    prev_i = np.clip(best - 1, 0, m - 1)
    next_i = np.clip(best + 1, 0, m - 1)
    s_prev = scores[rows, cols, prev_i]
    s_next = scores[rows, cols, next_i]
    denom = s_prev - 2.0 * peak + s_next
    flat = np.abs(denom) < 1e-12
    refine = 0.5 * (s_prev - s_next) / np.where(flat, 1.0, denom)
    offset = np.where(interior & ~flat, np.clip(refine, -1.0, 1.0), 0.0)

    values = steps[best] + offset * volume.drange.step_size
    values = np.clip(values, volume.drange.d_min, volume.drange.d_max)
    confidence = (peak + 1.0) / 2.0

    degenerate = ~(volume.valid_counts > 0).any(axis=2)
    values = np.where(degenerate, volume.drange.d_min, values)
    confidence = np.where(degenerate, 0.0, np.clip(confidence, 0.0, 1.0))
    return InverseDepthMap(values=values, confidence=confidence, drange=volume.drange)


def wta_step_indices(volume: CostVolume) -> np.ndarray:
    """The winning discrete step per pixel (no sub-step refinement)."""
    return np.argmax(volume.scores, axis=2)


def depth_to_pointcloud(
    dmap: InverseDepthMap, key: Frame, min_confidence: float = 0.0
):
    """Backproject confident pixels into world space.

    Returns (points (N, 3) in meters, colors (N, 3) uint8) taken from the
    keyframe image (grayscale replicated across channels).
    """
    if not 0 <= min_confidence or min_confidence != min_confidence:
        raise CostVolumeError("confidence threshold must be a number >= 0")
    keep = dmap.confidence >= min_confidence
    if not keep.any():
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.uint8)
    h, w = dmap.values.shape
    uu, vv = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    pixels = np.stack([uu[keep], vv[keep]], axis=-1)
    cam_points = backproject(key.intrinsics, pixels, dmap.values[keep])
    world = key.pose.inverse().transform(cam_points)

    img = key.image
    if img.ndim == 2:
        rgb = np.repeat(img[keep][:, None], 3, axis=1)
    else:
        rgb = img[keep][:, :3]
    colors = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    return world, colors
