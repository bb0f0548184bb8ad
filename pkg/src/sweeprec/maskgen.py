"""Auxiliary moving-object masks: per-pixel inconsistency metrics, the
2-of-3 classification rule, and instance-level temporal filtering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Frame, warp_to_keyframe
from .photometric import DimensionError, photometric_error_map

# Default thresholds for the 2-of-3 rule. The two photometric thresholds
# are calibrated for the SSIM-based error in [0, 1]; the depth-ratio
# threshold is the conventional 1.5.
DEFAULT_THRESHOLDS = (0.3, 0.25, 1.5)
DEFAULT_MIN_IOU = 0.25
DEFAULT_MIN_MOVING_FRACTION = 0.4
# Probability masks are binarized at this level before instance statistics.
DEFAULT_BINARY_THRESHOLD = 0.5


class MaskGenError(ValueError):
    """Invalid mask-generation inputs."""


@dataclass(frozen=True)
class InstanceMask:
    """One movable-class instance in one frame."""

    frame_index: int
    instance_id: int
    class_label: str
    pixels: np.ndarray

    @property
    def area(self) -> int:
        return int(self.pixels.sum())


@dataclass
class InstanceChain:
    """An instance matched (where possible) to its temporal neighbors."""

    current: InstanceMask
    previous: InstanceMask | None = None
    following: InstanceMask | None = None

    def members(self) -> list[InstanceMask]:
        return [m for m in (self.previous, self.current, self.following) if m is not None]


def inconsistency_metrics(
    key: Frame,
    temporal: list[Frame],
    stereo: Frame | None,
    inv_depth_temporal: np.ndarray,
    inv_depth_stereo: np.ndarray,
):
    """Three per-pixel cues that temporal and stereo geometry disagree.

    1. stereo photometric error under the temporal depth,
    2. mean temporal photometric error under the stereo depth,
    3. ratio between the two depths, max(d_t/d_s, d_s/d_t).

    Photometric metrics are 0 where the warp is invalid (no evidence).
    """
    if stereo is None:
        raise MaskGenError("metrics need the static stereo frame")
    if inv_depth_temporal.shape != inv_depth_stereo.shape:
        raise DimensionError("depth map shapes do not agree")

    warped, ok = warp_to_keyframe(stereo, key, inv_depth_temporal)
    err = photometric_error_map(warped, key.image, valid=ok)
    m1 = np.where(err.valid, err.values, 0.0)

    total = np.zeros(inv_depth_temporal.shape)
    count = np.zeros(inv_depth_temporal.shape)
    for frame in temporal:
        warped, ok = warp_to_keyframe(frame, key, inv_depth_stereo)
        err = photometric_error_map(warped, key.image, valid=ok)
        total += np.where(err.valid, err.values, 0.0)
        count += err.valid
    m2 = total / np.maximum(count, 1.0)

    dt = np.maximum(inv_depth_temporal, 1e-12)
    ds = np.maximum(inv_depth_stereo, 1e-12)
    m3 = np.maximum(dt / ds, ds / dt)
    return m1, m2, m3


def classify_moving_pixels(metrics, thresholds=DEFAULT_THRESHOLDS) -> np.ndarray:
    """A pixel is moving when at least two metrics strictly exceed
    their thresholds."""
    if any(t <= 0 for t in thresholds):
        raise MaskGenError("thresholds must be positive")
    m1, m2, m3 = metrics
    exceed = (
        (m1 > thresholds[0]).astype(int)
        + (m2 > thresholds[1]).astype(int)
        + (m3 > thresholds[2]).astype(int)
    )
    return exceed >= 2


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def _greedy_match(
    current: list[InstanceMask], others: list[InstanceMask], min_iou: float
) -> dict[int, InstanceMask]:
    """One-to-one greedy matching by descending IoU, same class required."""
    pairs = []
    for ci, cur in enumerate(current):
        for oi, other in enumerate(others):
            if cur.class_label != other.class_label:
                continue
            iou = mask_iou(cur.pixels, other.pixels)
            if iou >= min_iou:
                pairs.append((-iou, ci, oi))
    pairs.sort()
    matched: dict[int, InstanceMask] = {}
    used_other = set()
    for _, ci, oi in pairs:
        if ci in matched or oi in used_other:
            continue
        matched[ci] = others[oi]
        used_other.add(oi)
    return matched


def match_instances(
    previous: list[InstanceMask],
    current: list[InstanceMask],
    following: list[InstanceMask],
    min_iou: float = DEFAULT_MIN_IOU,
) -> list[InstanceChain]:
    """Chain each current-frame instance to its best neighbors.

    Matches require equal class and IoU >= min_iou; unmatched neighbors
    are allowed, so chains have 1 to 3 members.
    """
    prev_match = _greedy_match(current, previous, min_iou)
    next_match = _greedy_match(current, following, min_iou)
    return [
        InstanceChain(
            current=inst,
            previous=prev_match.get(i),
            following=next_match.get(i),
        )
        for i, inst in enumerate(current)
    ]


def moving_fraction(mask: InstanceMask, moving_map: np.ndarray) -> float | None:
    """Share of an instance's pixels classified moving; None when empty."""
    area = mask.area
    if area == 0:
        return None
    return float(np.logical_and(mask.pixels, moving_map).sum() / area)


def instance_moving_decision(
    chain: InstanceChain,
    moving_maps: dict[int, np.ndarray],
    min_fraction: float = DEFAULT_MIN_MOVING_FRACTION,
) -> bool:
    """Flag the instance when the chain-averaged moving fraction exceeds
    the cutoff. Members without a moving map or without pixels are
    excluded from the average."""
    fractions = []
    for member in chain.members():
        moving = moving_maps.get(member.frame_index)
        if moving is None:
            continue
        frac = moving_fraction(member, moving)
        if frac is not None:
            fractions.append(frac)
    if not fractions:
        return False
    return float(np.mean(fractions)) > min_fraction


def compose_aux_mask(
    chains: list[InstanceChain],
    moving_maps: dict[int, np.ndarray],
    shape: tuple[int, int],
    min_fraction: float = DEFAULT_MIN_MOVING_FRACTION,
) -> np.ndarray:
    """Union of the pixels of every instance flagged moving (binary)."""
    out = np.zeros(shape, dtype=bool)
    for chain in chains:
        if instance_moving_decision(chain, moving_maps, min_fraction):
            out |= chain.current.pixels
    return out
