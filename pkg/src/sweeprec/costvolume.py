"""Plane-sweep cost volumes: per-pair error stacks, consensus weighting,
aggregation, and moving-object attenuation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import Frame, warp_to_keyframe
from .photometric import DimensionError, photometric_error_map

# Below this total frame weight a pixel/step pair carries no usable
# evidence and gets the neutral score 0.
MIN_WEIGHT_SUM = 1e-12

DEFAULT_WEIGHT_SHARPNESS = 10.0

VOLUME_KINDS = ("aggregated", "per_pair", "static_stereo")


class CostVolumeError(ValueError):
    """Invalid cost-volume inputs."""


@dataclass(frozen=True)
class DepthRange:
    """Inverse-depth sweep bounds and step count."""

    d_min: float
    d_max: float
    num_steps: int

    def __post_init__(self) -> None:
        if not 0 < self.d_min < self.d_max:
            raise CostVolumeError(
                f"need 0 < d_min < d_max, got [{self.d_min}, {self.d_max}]"
            )
        if self.num_steps < 2:
            raise CostVolumeError(f"need at least 2 depth steps, got {self.num_steps}")

    @property
    def step_size(self) -> float:
        return (self.d_max - self.d_min) / (self.num_steps - 1)


def depth_steps(drange: DepthRange) -> np.ndarray:
    """The swept inverse depths: linear spacing with exact endpoints."""
    return np.linspace(drange.d_min, drange.d_max, drange.num_steps)


@dataclass
class PairErrorStack:
    """Photometric errors of one source frame at every depth step.

    values/valid are (H, W, M); invalid entries hold error 1.0.
    """

    values: np.ndarray
    valid: np.ndarray
    frame_id: int | None = None


@dataclass
class CostVolume:
    """Consistency scores in [-1, 1] per pixel and depth step.

    valid_counts holds how many source frames contributed at each
    (pixel, step); per-pair volumes have counts in {0, 1}.
    """

    scores: np.ndarray
    valid_counts: np.ndarray
    drange: DepthRange
    kind: str = "aggregated"


def pair_error_stack(
    key: Frame,
    other: Frame,
    drange: DepthRange,
    frame_id: int | None = None,
    threads: int = 1,
) -> PairErrorStack:
    """Sweep `other` over the depth steps and record errors vs the keyframe."""
    steps = depth_steps(drange)
    h, w = key.shape
    values = np.empty((h, w, len(steps)))
    valid = np.empty((h, w, len(steps)), dtype=bool)

    def fill(i: int) -> None:
        warped, ok = warp_to_keyframe(other, key, steps[i])
        err = photometric_error_map(warped, key.image, valid=ok)
        values[:, :, i] = err.values
        valid[:, :, i] = err.valid

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(len(steps))))
    else:
        for i in range(len(steps)):
            fill(i)
    return PairErrorStack(values=values, valid=valid, frame_id=frame_id)


def frame_weight(
    stack: PairErrorStack, sharpness: float = DEFAULT_WEIGHT_SHARPNESS
) -> np.ndarray:
    """Per-pixel weight in [0, 1] favoring a sharply peaked error minimum.

    w = 1 - mean over non-optimal steps of exp(-sharpness * (pe - pe*)^2)
    with pe* the per-pixel minimum over valid steps. Steps with no valid
    error contribute the neutral term 1 (no evidence of a sharp minimum),
    and pixels with no valid step at all get weight 0.
    """
    m = stack.values.shape[2]
    has_valid = stack.valid.any(axis=2)
    masked = np.where(stack.valid, stack.values, np.inf)
    best = np.min(masked, axis=2)
    best = np.where(has_valid, best, 0.0)
    diff = stack.values - best[:, :, None]
    terms = np.where(stack.valid, np.exp(-sharpness * diff * diff), 1.0)
    # The optimal step contributes exp(0) = 1 exactly; drop it from the sum.
    total = terms.sum(axis=2) - 1.0
    w = 1.0 - total / (m - 1)
    return np.where(has_valid, np.clip(w, 0.0, 1.0), 0.0)


def aggregate(
    stacks: list[PairErrorStack],
    weights: list[np.ndarray],
    drange: DepthRange,
    kind: str = "aggregated",
) -> CostVolume:
    """Combine per-frame error stacks into a consistency volume.

    score = 1 - 2 * (sum of pe * w) / (sum of w) over the frames valid at
    each (pixel, step); pixels/steps without usable evidence score 0 with
    count 0. Stacks carrying frame ids are summed in id order so the
    result is independent of input permutation.
    """
    if not stacks:
        raise CostVolumeError("aggregation needs at least one source frame")
    if len(stacks) != len(weights):
        raise CostVolumeError("one weight map per stack required")
    if kind not in VOLUME_KINDS:
        raise CostVolumeError(f"unknown volume kind {kind!r}")
    order = range(len(stacks))
    if all(s.frame_id is not None for s in stacks):
        order = sorted(order, key=lambda i: stacks[i].frame_id)

    shape = stacks[0].values.shape
    num = np.zeros(shape)
    den = np.zeros(shape)
    counts = np.zeros(shape, dtype=np.int32)
    for i in order:
        stack, w = stacks[i], weights[i]
        if stack.values.shape != shape or w.shape != shape[:2]:
            raise CostVolumeError("stack/weight shapes do not agree")
        wv = np.where(stack.valid, w[:, :, None], 0.0)
        num += stack.values * wv
        den += wv
        counts += stack.valid.astype(np.int32)

    usable = (den >= MIN_WEIGHT_SUM) & (counts > 0)
    scores = np.where(usable, 1.0 - 2.0 * num / np.where(usable, den, 1.0), 0.0)
    counts = np.where(usable, counts, 0)
    return CostVolume(scores=scores, valid_counts=counts, drange=drange, kind=kind)


def apply_mask(volume: CostVolume, mask: np.ndarray) -> CostVolume:
    """Attenuate scores by (1 - mask) at every depth step.

    Pixels with mask 1 (certainly moving) are zeroed so the volume keeps
    no maxima there; 0 leaves the volume untouched.
    """
    m = np.asarray(mask, dtype=float)
    if m.shape != volume.scores.shape[:2]:
        raise DimensionError(
            f"mask shape {m.shape} does not match volume {volume.scores.shape[:2]}"
        )
    if np.any(m < 0) or np.any(m > 1):
        raise CostVolumeError("mask values must lie in [0, 1]")
    return CostVolume(
        scores=(1.0 - m)[:, :, None] * volume.scores,
        valid_counts=volume.valid_counts.copy(),
        drange=volume.drange,
        kind=volume.kind,
    )


def build_cost_volume(
    key: Frame,
    others: list[Frame],
    drange: DepthRange,
    sharpness: float = DEFAULT_WEIGHT_SHARPNESS,
    kind: str = "aggregated",
    threads: int = 1,
) -> CostVolume:
    """Full pipeline: error stacks, consensus weights, aggregation.

    Frames are identified by their position in `others`, so callers
    should pass them in a fixed (index) order for reproducible output.
    """
    if not others:
        raise CostVolumeError("need at least one non-keyframe frame")
    stacks = [
        pair_error_stack(key, frame, drange, frame_id=i, threads=threads)
        for i, frame in enumerate(others)
    ]
    weights = [frame_weight(s, sharpness) for s in stacks]
    return aggregate(stacks, weights, drange, kind=kind)
