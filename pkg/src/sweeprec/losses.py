"""The semi-supervised loss stack: per-pixel-minimum reprojection loss,
sparse depth supervision, edge-aware smoothness, the mask losses, the
two refinement objectives, and finite-difference gradient checking.

Every scalar loss has a matching hand-derived gradient with respect to
the inverse depth map so the differentiable-sampling contract of the
warp can actually be verified, not just assumed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import Frame, warp_coordinates, warp_to_keyframe_with_jacobian
from .photometric import (
    DimensionError,
    photometric_error_map,
    ssim_map_backward,
)

logger = logging.getLogger(__name__)

DEFAULT_NUM_SCALES = 4


class LossError(ValueError):
    """Invalid loss inputs (e.g. nothing valid to average over)."""


@dataclass(frozen=True)
class LossWeights:
    """Weights of the loss stack.

    ssim_weight mixes the SSIM error against plain L1 inside the
    reprojection loss; smooth_weight_base is halved at each coarser
    scale; stereo_prior_weight pulls moving pixels toward the frozen
    stereo depth during refinement.
    """

    ssim_weight: float = 0.85
    sparse_weight: float = 4.0
    smooth_weight_base: float = 1e-3
    stereo_prior_weight: float = 4.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.ssim_weight <= 1.0:
            raise LossError("ssim_weight must lie in [0, 1]")
        if min(self.sparse_weight, self.smooth_weight_base, self.stereo_prior_weight) < 0:
            raise LossError("loss weights must be non-negative")

    def smooth_weight(self, scale: int) -> float:
        return self.smooth_weight_base * 2.0 ** (-scale)


@dataclass
class SparseDepth:
    """Sparse inverse-depth supervision at integer pixel positions."""

    pixels: np.ndarray
    inv_depths: np.ndarray

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=int).reshape(-1, 2)
        self.inv_depths = np.asarray(self.inv_depths, dtype=float).reshape(-1)
        if len(self.pixels) != len(self.inv_depths):
            raise LossError("sparse pixels/depths length mismatch")
        if np.any(self.inv_depths <= 0):
            raise LossError("sparse inverse depths must be positive")

    def __len__(self) -> int:
        return len(self.inv_depths)

    def scaled(self, scale: int, shape: tuple[int, int]) -> "SparseDepth":
        """Samples re-indexed for a 2^scale-downsampled map; samples that
        fall off the (possibly cropped) coarse grid are dropped."""
        if scale == 0:
            return self
        px = self.pixels // (2**scale)
        keep = (px[:, 0] < shape[1]) & (px[:, 1] < shape[0])
        return SparseDepth(pixels=px[keep], inv_depths=self.inv_depths[keep])


@dataclass
class LossReport:
    """Scalar losses per term and scale, plus optional per-pixel maps.

    `terms` holds the raw (unweighted) term values; `total` is the
    weighted sum as documented by each loss builder.
    """

    total: float
    terms: dict[tuple[str, int], float]
    weights: LossWeights
    maps: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, int, float]]:
        return [(name, scale, value) for (name, scale), value in sorted(self.terms.items())]


# ---------------------------------------------------------------------------
# Multi-scale helpers


def downsample2(image: np.ndarray) -> np.ndarray:
    """2x2 area averaging (odd trailing rows/columns are cropped)."""
    img = np.asarray(image, dtype=float)
    h, w = img.shape[:2]
    img = img[: h - h % 2, : w - w % 2]
    if img.ndim == 2:
        return 0.25 * (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2] + img[1::2, 1::2])
    return 0.25 * (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2] + img[1::2, 1::2])


def scale_frame(frame: Frame) -> Frame:
    return Frame(
        image=downsample2(frame.image),
        intrinsics=frame.intrinsics.halved(),
        pose=frame.pose,
        role=frame.role,
    )


def frame_pyramid(frame: Frame, num_scales: int) -> list[Frame]:
    out = [frame]
    for _ in range(num_scales - 1):
        out.append(scale_frame(out[-1]))
    return out


def map_pyramid(values: np.ndarray, num_scales: int) -> list[np.ndarray]:
    out = [np.asarray(values, dtype=float)]
    for _ in range(num_scales - 1):
        out.append(downsample2(out[-1]))
    return out


# ---------------------------------------------------------------------------
# Reprojection (per-pixel minimum) loss


def _candidate_stack(key: Frame, sources: list[Frame], inv_depth, ssim_weight: float,
                     want_jacobian: bool = False):
    """Per-source photometric candidates: ssim_weight * pe + (1-w) * L1."""
    if not sources:
        raise LossError("need at least one reprojection source")
    cands, valids, extras = [], [], []
    for src in sources:
        warped, valid, jac = warp_to_keyframe_with_jacobian(src, key, inv_depth)
        err = photometric_error_map(warped, key.image, valid=valid)
        diff = warped - key.image
        l1 = np.abs(diff) if diff.ndim == 2 else np.abs(diff).mean(axis=2)
        cand = ssim_weight * err.values + (1.0 - ssim_weight) * l1
        cands.append(cand)
        valids.append(valid)
        extras.append((warped, jac if want_jacobian else None))
    return np.stack(cands), np.stack(valids), extras


def reprojection_loss(
    key: Frame,
    sources: list[Frame],
    inv_depth: np.ndarray,
    weights: LossWeights,
    pixel_weights: np.ndarray | None = None,
    return_map: bool = False,
):
    """Mean over valid pixels of the per-pixel minimum photometric error.

    Candidates come from every source warped at `inv_depth`; invalid
    warps are excluded from the minimum, and pixels with no valid
    candidate are excluded from the mean. Optional `pixel_weights`
    multiply the per-pixel values inside the mean (the mask gating used
    by the refinement losses).
    """
    cand, valid, _ = _candidate_stack(key, sources, inv_depth, weights.ssim_weight)
    masked = np.where(valid, cand, np.inf)
    any_valid = valid.any(axis=0)
    if not any_valid.any():
        raise LossError("no valid reprojection pixels")
    best = np.where(any_valid, masked.min(axis=0), 0.0)
    pw = np.ones(best.shape) if pixel_weights is None else np.asarray(pixel_weights, float)
    scalar = float((best * pw)[any_valid].sum() / any_valid.sum())
    if return_map:
        return scalar, best, any_valid
    return scalar


def reprojection_loss_map(key, sources, inv_depth, weights: LossWeights):
    """The per-pixel minimum candidate map and its validity (no mean)."""
    cand, valid, _ = _candidate_stack(key, sources, inv_depth, weights.ssim_weight)
    any_valid = valid.any(axis=0)
    best = np.where(any_valid, np.where(valid, cand, np.inf).min(axis=0), 0.0)
    return best, any_valid


def reprojection_loss_grad(
    key: Frame,
    sources: list[Frame],
    inv_depth: np.ndarray,
    weights: LossWeights,
    pixel_weights: np.ndarray | None = None,
):
    """reprojection_loss plus its exact gradient w.r.t. the depth map.

    Chains the bilinear-sampling Jacobian of each warp through the SSIM
    window adjoints and the frozen per-pixel argmin selection.
    """
    lam = weights.ssim_weight
    cand, valid, extras = _candidate_stack(key, sources, inv_depth, lam, want_jacobian=True)
    masked = np.where(valid, cand, np.inf)
    any_valid = valid.any(axis=0)
    if not any_valid.any():
        raise LossError("no valid reprojection pixels")
    sel = np.argmin(masked, axis=0)
    best = np.where(any_valid, np.take_along_axis(masked, sel[None], axis=0)[0], 0.0)
    pw = np.ones(best.shape) if pixel_weights is None else np.asarray(pixel_weights, float)
    n_valid = int(any_valid.sum())
    scalar = float((best * pw)[any_valid].sum() / n_valid)

    grad = np.zeros(best.shape)
    key_img = key.image
    multi = key_img.ndim == 3
    for s, (warped, jac) in enumerate(extras):
        g_base = np.where((sel == s) & any_valid & valid[s], pw / n_valid, 0.0)
        if not g_base.any():
            continue
        # L1 branch: d|warped - key| / d(inv depth), channel-averaged.
        diff = warped - key_img
        if multi:
            sign = np.sign(diff)
            l1_term = (sign * jac).mean(axis=2)
        else:
            l1_term = np.sign(diff) * jac
        grad += (1.0 - lam) * g_base * l1_term
        # SSIM branch: pe = (1 - ssim) / 2, adjoint through the windows.
        g_ssim = -0.5 * lam * g_base
        ga = ssim_map_backward(warped, key_img, g_ssim, valid=valid[s])
        grad += (ga * jac).sum(axis=2) if multi else ga * jac
    return scalar, grad


def reprojection_smooth_mask(
    key: Frame,
    sources: list[Frame],
    inv_depth: np.ndarray,
    weights: LossWeights,
    fd_step: float = 1e-4,
    safety: float = 25.0,
    border_margin: float = 1.0,
    tie_margin: float = 2e-3,
    l1_margin: float = 1e-3,
) -> np.ndarray:
    """Pixels where the reprojection loss is differentiable in the depth.

    A finite-difference probe of size `fd_step` moves the warped sample
    by |d(coord)/d(depth)| * fd_step, so the sample must sit at least
    `safety` times that distance away from every bilinear cell boundary
    and image border. Per-pixel-minimum ties (dilated by the SSIM
    window) and L1 sign boundaries are excluded as well.
    """
    cand, valid, extras = _candidate_stack(key, sources, inv_depth, weights.ssim_weight)
    ok = valid.all(axis=0)
    h, w = ok.shape
    for src, (warped, _) in zip(sources, extras):
        coords, in_front, cjac = warp_coordinates(src, key, inv_depth)
        u, v = coords[..., 0], coords[..., 1]
        margin_u = np.abs(cjac[..., 0]) * fd_step * safety + 1e-9
        margin_v = np.abs(cjac[..., 1]) * fd_step * safety + 1e-9
        fu = u - np.floor(u)
        fv = v - np.floor(v)
        ok &= in_front
        ok &= (u >= border_margin) & (u <= w - 1 - border_margin)
        ok &= (v >= border_margin) & (v <= h - 1 - border_margin)
        ok &= (fu >= margin_u) & (fu <= 1 - margin_u)
        ok &= (fv >= margin_v) & (fv <= 1 - margin_v)
        diff = np.abs(warped - key.image)
        if diff.ndim == 3:
            diff = diff.min(axis=2)
        ok &= diff > l1_margin
    if len(sources) > 1:
        masked = np.where(valid, cand, np.inf)
        part = np.sort(masked, axis=0)
        runner_up = np.where(np.isfinite(part[1]), part[1], 0.0)
        gap = np.where(np.isfinite(part[1]), runner_up - part[0], np.inf)
        # A depth perturbation reaches every pixel in the 3x3 SSIM window,
        # so ties anywhere in the window poison the finite difference.
        from .photometric import _box_sum3

        ok &= _box_sum3((gap <= tie_margin).astype(float)) == 0
    return ok


# ---------------------------------------------------------------------------
# Sparse depth loss


def sparse_depth_loss(
    inv_depth: np.ndarray,
    sparse: SparseDepth,
    pixel_weights: np.ndarray | None = None,
) -> float:
    """Mean absolute inverse-depth error over the sample pixels only."""
    if len(sparse) == 0:
        logger.warning("sparse depth loss evaluated with zero samples; defined as 0")
        return 0.0
    u, v = sparse.pixels[:, 0], sparse.pixels[:, 1]
    h, w = inv_depth.shape
    if u.min() < 0 or v.min() < 0 or u.max() >= w or v.max() >= h:
        raise LossError("sparse sample outside the depth map")
    diffs = np.abs(inv_depth[v, u] - sparse.inv_depths)
    if pixel_weights is not None:
        diffs = diffs * pixel_weights[v, u]
    return float(diffs.mean())


def sparse_depth_loss_grad(
    inv_depth: np.ndarray,
    sparse: SparseDepth,
    pixel_weights: np.ndarray | None = None,
):
    loss = sparse_depth_loss(inv_depth, sparse, pixel_weights)
    grad = np.zeros(inv_depth.shape)
    if len(sparse) == 0:
        return loss, grad
    u, v = sparse.pixels[:, 0], sparse.pixels[:, 1]
    g = np.sign(inv_depth[v, u] - sparse.inv_depths) / len(sparse)
    if pixel_weights is not None:
        g = g * pixel_weights[v, u]
    np.add.at(grad, (v, u), g)
    return loss, grad


# ---------------------------------------------------------------------------
# Edge-aware smoothness


def smoothness_loss(inv_depth: np.ndarray, image: np.ndarray) -> float:
    """Edge-aware first-order smoothness of mean-normalized inverse depth.

    mean(|dx d| * exp(-|dx I|)) + mean(|dy d| * exp(-|dy I|)) with
    forward differences; image gradients are channel-averaged.
    """
    mu = float(np.mean(inv_depth))
    if mu == 0:
        raise LossError("mean inverse depth is zero; cannot normalize")
    dn = np.asarray(inv_depth, float) / mu
    img = np.asarray(image, float)
    gx_i = np.abs(img[:, 1:] - img[:, :-1])
    gy_i = np.abs(img[1:, :] - img[:-1, :])
    if img.ndim == 3:
        gx_i = gx_i.mean(axis=2)
        gy_i = gy_i.mean(axis=2)
    tx = np.abs(dn[:, 1:] - dn[:, :-1]) * np.exp(-gx_i)
    ty = np.abs(dn[1:, :] - dn[:-1, :]) * np.exp(-gy_i)
    return float(tx.mean() + ty.mean())


def smoothness_loss_grad(inv_depth: np.ndarray, image: np.ndarray):
    mu = float(np.mean(inv_depth))
    if mu == 0:
        raise LossError("mean inverse depth is zero; cannot normalize")
    d = np.asarray(inv_depth, float)
    dn = d / mu
    img = np.asarray(image, float)
    gx_i = np.abs(img[:, 1:] - img[:, :-1])
    gy_i = np.abs(img[1:, :] - img[:-1, :])
    if img.ndim == 3:
        gx_i = gx_i.mean(axis=2)
        gy_i = gy_i.mean(axis=2)
    ex = np.exp(-gx_i)
    ey = np.exp(-gy_i)
    dx = dn[:, 1:] - dn[:, :-1]
    dy = dn[1:, :] - dn[:-1, :]
    loss = float((np.abs(dx) * ex).mean() + (np.abs(dy) * ey).mean())

    g_dn = np.zeros(dn.shape)
    gx = np.sign(dx) * ex / dx.size
    g_dn[:, 1:] += gx
    g_dn[:, :-1] -= gx
    gy = np.sign(dy) * ey / dy.size
    g_dn[1:, :] += gy
    g_dn[:-1, :] -= gy
    # dn = d / mean(d): the normalization couples every pixel.
    grad = g_dn / mu - (g_dn * d).sum() / (mu * mu * d.size)
    return loss, grad


def smoothness_smooth_mask(
    inv_depth: np.ndarray, image: np.ndarray, margin: float = 5e-3
) -> np.ndarray:
    """Pixels whose touching forward differences are safely nonzero."""
    mu = float(np.mean(inv_depth))
    dn = inv_depth / mu
    h, w = dn.shape
    ok = np.ones((h, w), dtype=bool)
    dx = np.abs(dn[:, 1:] - dn[:, :-1]) > margin
    dy = np.abs(dn[1:, :] - dn[:-1, :]) > margin
    ok[:, 1:] &= dx
    ok[:, :-1] &= dx
    ok[1:, :] &= dy
    ok[:-1, :] &= dy
    return ok


# ---------------------------------------------------------------------------
# Bootstrapping losses (multi-scale)


def multiscale_depth_loss(
    key: Frame,
    temporal: list[Frame],
    stereo: Frame | None,
    inv_depths: list[np.ndarray],
    sparse: SparseDepth,
    weights: LossWeights,
    return_maps: bool = False,
) -> LossReport:
    """Per-scale reprojection + sparse + smoothness, summed over scales.

    `inv_depths` supplies the depth prediction at every scale (finest
    first); images are area-downsampled to match.
    """
    num_scales = len(inv_depths)
    keys = frame_pyramid(key, num_scales)
    temporals = [frame_pyramid(f, num_scales) for f in temporal]
    stereos = frame_pyramid(stereo, num_scales) if stereo is not None else None

    terms: dict[tuple[str, int], float] = {}
    maps: dict[tuple[str, int], np.ndarray] = {}
    total = 0.0
    for s in range(num_scales):
        sources = [pyr[s] for pyr in temporals]
        if stereos is not None:
            sources.append(stereos[s])
        d_s = inv_depths[s]
        self_val, self_map, self_valid = reprojection_loss(
            keys[s], sources, d_s, weights, return_map=True
        )
        sparse_val = sparse_depth_loss(d_s, sparse.scaled(s, d_s.shape))
        smooth_val = smoothness_loss(d_s, keys[s].image)
        terms[("reprojection", s)] = self_val
        terms[("sparse", s)] = sparse_val
        terms[("smooth", s)] = smooth_val
        if return_maps:
            maps[("reprojection", s)] = self_map
            maps[("reprojection_valid", s)] = self_valid
        total = total + (
            self_val
            + weights.sparse_weight * sparse_val
            + weights.smooth_weight(s) * smooth_val
        )
    return LossReport(total=float(total), terms=terms, weights=weights, maps=maps)


def mask_bce_loss(pred: np.ndarray, target: np.ndarray, clamp: float = 1e-7) -> float:
    """Weighted binary cross entropy between a probability mask and a
    binary reference.

    The positive class is weighted by the negative/positive pixel ratio
    (clamped to [1, 100]; 1 when there are no positives) to counter the
    typically tiny share of moving pixels.
    """
    p = np.asarray(pred, dtype=float)
    y = np.asarray(target, dtype=float)
    if p.shape != y.shape:
        raise DimensionError(f"mask shapes differ: {p.shape} vs {y.shape}")
    p = np.clip(p, clamp, 1.0 - clamp)
    pos = float(y.sum())
    neg = float(y.size - pos)
    w_pos = 1.0 if pos == 0 else float(np.clip(neg / pos, 1.0, 100.0))
    ll = w_pos * y * np.log(p) + (1.0 - y) * np.log(1.0 - p)
    return float(-(ll.mean()))


# ---------------------------------------------------------------------------
# Refinement losses


def frozen_reprojection_maps(
    key: Frame,
    sources: list[Frame],
    inv_depths: list[np.ndarray],
    weights: LossWeights,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-scale per-pixel reprojection-loss maps with frozen depths.

    Used as constants inside the mask refinement objective: no gradient
    flows through the depths that produced them.
    """
    num_scales = len(inv_depths)
    keys = frame_pyramid(key, num_scales)
    pyramids = [frame_pyramid(f, num_scales) for f in sources]
    out = []
    for s in range(num_scales):
        out.append(
            reprojection_loss_map(
                keys[s], [pyr[s] for pyr in pyramids], inv_depths[s], weights
            )
        )
    return out


def mask_interpolation_map(
    mask: np.ndarray, static_map: np.ndarray, temporal_map: np.ndarray
) -> np.ndarray:
    """Pixel-wise blend: mask picks the static-stereo loss, (1 - mask)
    the temporal loss. Its derivative in the mask is their difference."""
    return mask * static_map + (1.0 - mask) * temporal_map


def mask_refinement_loss(
    mask: np.ndarray,
    static_maps: list[tuple[np.ndarray, np.ndarray]],
    temporal_maps: list[tuple[np.ndarray, np.ndarray]],
    aux_mask: np.ndarray,
    weights: LossWeights,
    return_maps: bool = False,
) -> LossReport:
    """Mask-interpolated frozen losses summed over scales, plus the
    supervised BCE regularizer."""
    if len(static_maps) != len(temporal_maps):
        raise LossError("need matching per-scale static/temporal loss maps")
    mask_pyr = map_pyramid(mask, len(static_maps))
    terms: dict[tuple[str, int], float] = {}
    maps: dict[tuple[str, int], np.ndarray] = {}
    total = 0.0
    for s, ((sm, sv), (tm, tv)) in enumerate(zip(static_maps, temporal_maps)):
        both = sv & tv
        if not both.any():
            raise LossError(f"no jointly valid pixels at scale {s}")
        blend = mask_interpolation_map(mask_pyr[s], sm, tm)
        value = float(blend[both].mean())
        terms[("interpolated", s)] = value
        if return_maps:
            maps[("interpolated", s)] = blend
            maps[("interpolated_valid", s)] = both
        total = total + value
    bce = mask_bce_loss(mask, aux_mask)
    terms[("mask_bce", 0)] = bce
    total = total + bce
    return LossReport(total=float(total), terms=terms, weights=weights, maps=maps)


def depth_refinement_loss(
    key: Frame,
    temporal: list[Frame],
    stereo: Frame,
    inv_depths: list[np.ndarray],
    stereo_inv_depths: list[np.ndarray],
    mask: np.ndarray,
    sparse: SparseDepth,
    weights: LossWeights,
) -> LossReport:
    """Mask-gated refinement objective.

    Static pixels (mask 0) keep the full self-supervised + sparse terms;
    moving pixels (mask 1) are trained from the static-stereo
    reprojection plus an L1 prior toward the frozen stereo depth. With a
    zero mask this reproduces the bootstrapping loss terms exactly.
    """
    num_scales = len(inv_depths)
    if len(stereo_inv_depths) != num_scales:
        raise LossError("need a frozen stereo depth per scale")
    keys = frame_pyramid(key, num_scales)
    temporals = [frame_pyramid(f, num_scales) for f in temporal]
    stereos = frame_pyramid(stereo, num_scales)
    mask_pyr = map_pyramid(mask, num_scales)

    terms: dict[tuple[str, int], float] = {}
    total = 0.0
    for s in range(num_scales):
        d_s = inv_depths[s]
        m_s = mask_pyr[s]
        keep = 1.0 - m_s
        sources = [pyr[s] for pyr in temporals] + [stereos[s]]
        self_val = reprojection_loss(keys[s], sources, d_s, weights, pixel_weights=keep)
        sparse_val = sparse_depth_loss(d_s, sparse.scaled(s, d_s.shape), pixel_weights=keep)
        stereo_val = reprojection_loss(
            keys[s], [stereos[s]], d_s, weights, pixel_weights=m_s
        )
        prior_val = float((m_s * np.abs(d_s - stereo_inv_depths[s])).mean())
        smooth_val = smoothness_loss(d_s, keys[s].image)
        terms[("reprojection", s)] = self_val
        terms[("sparse", s)] = sparse_val
        terms[("stereo_reprojection", s)] = stereo_val
        terms[("stereo_prior", s)] = prior_val
        terms[("smooth", s)] = smooth_val
        total = total + (
            self_val
            + weights.sparse_weight * sparse_val
            + stereo_val
            + weights.stereo_prior_weight * prior_val
            + weights.smooth_weight(s) * smooth_val
        )
    return LossReport(total=float(total), terms=terms, weights=weights)


def depth_refinement_loss_grad(
    key: Frame,
    temporal: list[Frame],
    stereo: Frame,
    inv_depth: np.ndarray,
    stereo_inv_depth: np.ndarray,
    mask: np.ndarray,
    sparse: SparseDepth,
    weights: LossWeights,
):
    """Finest-scale refinement loss and its gradient in the depth map."""
    keep = 1.0 - np.asarray(mask, dtype=float)
    sources = list(temporal) + [stereo]
    l_self, g_self = reprojection_loss_grad(
        key, sources, inv_depth, weights, pixel_weights=keep
    )
    l_sp, g_sp = sparse_depth_loss_grad(inv_depth, sparse, pixel_weights=keep)
    l_st, g_st = reprojection_loss_grad(
        key, [stereo], inv_depth, weights, pixel_weights=mask
    )
    prior_diff = inv_depth - stereo_inv_depth
    l_pr = float((mask * np.abs(prior_diff)).mean())
    g_pr = mask * np.sign(prior_diff) / inv_depth.size
    l_sm, g_sm = smoothness_loss_grad(inv_depth, key.image)
    beta0 = weights.smooth_weight(0)
    loss = (
        l_self
        + weights.sparse_weight * l_sp
        + l_st
        + weights.stereo_prior_weight * l_pr
        + beta0 * l_sm
    )
    grad = (
        g_self
        + weights.sparse_weight * g_sp
        + g_st
        + weights.stereo_prior_weight * g_pr
        + beta0 * g_sm
    )
    return float(loss), grad


# ---------------------------------------------------------------------------
# Gradient checking


@dataclass
class GradientCheckResult:
    max_relative_error: float
    relative_errors: np.ndarray
    pixels: np.ndarray


def check_gradient(
    loss_fn,
    analytic_grad: np.ndarray,
    values: np.ndarray,
    pixels: np.ndarray,
    steps: tuple[float, ...] = (1e-4, 1e-5),
    denom_floor: float = 1e-8,
) -> GradientCheckResult:
    """Compare an analytic gradient against central differences.

    For each probed pixel the finite difference is taken at every step
    size and the best agreement kept (truncation and round-off trade off
    against each other); the relative error uses the larger of the two
    gradients as denominator, floored to dodge 0/0.
    """
    pixels = np.asarray(pixels, dtype=int).reshape(-1, 2)
    errors = np.empty(len(pixels))
    for i, (u, v) in enumerate(pixels):
        g = float(analytic_grad[v, u])
        best = np.inf
        for h in steps:
            plus = values.copy()
            plus[v, u] += h
            minus = values.copy()
            minus[v, u] -= h
            fd = (loss_fn(plus) - loss_fn(minus)) / (2.0 * h)
            denom = max(abs(g), abs(fd), denom_floor)
            best = min(best, abs(g - fd) / denom)
        errors[i] = best
    return GradientCheckResult(
        max_relative_error=float(errors.max()) if len(errors) else 0.0,
        relative_errors=errors,
        pixels=pixels,
    )
