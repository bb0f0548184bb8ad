"""Bundle-level orchestration shared by the CLI and the test suite."""

from __future__ import annotations

import numpy as np

from .config import PipelineConfig
from .costvolume import CostVolume, DepthRange, build_cost_volume
from .depthmap import InverseDepthMap, wta_depth
from .losses import LossWeights, map_pyramid
from .maskgen import (
    classify_moving_pixels,
    compose_aux_mask,
    inconsistency_metrics,
    match_instances,
)
from .synth import GroundTruthBundle


def depth_range_from_config(cfg: PipelineConfig) -> DepthRange:
    return DepthRange(d_min=cfg.depth_min, d_max=cfg.depth_max, num_steps=cfg.depth_steps)


def loss_weights_from_config(cfg: PipelineConfig) -> LossWeights:
    return LossWeights(
        ssim_weight=cfg.loss_lambda,
        sparse_weight=cfg.loss_alpha,
        smooth_weight_base=cfg.loss_beta_base,
        stereo_prior_weight=cfg.loss_gamma,
    )


def temporal_source_indices(
    bundle: GroundTruthBundle, index: int, count: int | None = 2
) -> list[int]:
    order = sorted(
        (i for i in range(bundle.num_frames) if i != index),
        key=lambda i: (abs(i - index), i),
    )
    picked = order if count is None else order[:count]
    return sorted(picked)


def build_keyframe_volume(
    bundle: GroundTruthBundle,
    cfg: PipelineConfig,
    index: int | None = None,
    stereo: bool = False,
    num_sources: int | None = 2,
    threads: int = 1,
) -> CostVolume:
    """Aggregated volume for a keyframe from temporal or stereo sources."""
    k = bundle.keyframe_index if index is None else index
    key = bundle.frames[k]
    if stereo:
        others = [bundle.stereo_frames[k]]
        kind = "static_stereo"
    else:
        others = [bundle.frames[i] for i in temporal_source_indices(bundle, k, num_sources)]
        kind = "aggregated"
    return build_cost_volume(
        key,
        others,
        depth_range_from_config(cfg),
        sharpness=cfg.weight_sharpness,
        kind=kind,
        threads=threads,
    )


def keyframe_depths(
    bundle: GroundTruthBundle,
    cfg: PipelineConfig,
    index: int,
    num_sources: int | None = 2,
    threads: int = 1,
) -> tuple[InverseDepthMap, InverseDepthMap]:
    """Winner-take-all depths from the temporal and stereo volumes."""
    temporal = wta_depth(
        build_keyframe_volume(bundle, cfg, index, False, num_sources, threads)
    )
    stereo = wta_depth(build_keyframe_volume(bundle, cfg, index, True, None, threads))
    return temporal, stereo


def moving_pixel_map(
    bundle: GroundTruthBundle,
    cfg: PipelineConfig,
    index: int,
    depths: tuple[InverseDepthMap, InverseDepthMap] | None = None,
    threads: int = 1,
) -> np.ndarray:
    """2-of-3 inconsistency classification for one frame."""
    if depths is None:
        depths = keyframe_depths(bundle, cfg, index, threads=threads)
    d_temporal, d_stereo = depths
    temporal = [
        bundle.frames[i] for i in temporal_source_indices(bundle, index, 2)
    ]
    metrics = inconsistency_metrics(
        bundle.frames[index],
        temporal,
        bundle.stereo_frames[index],
        d_temporal.values,
        d_stereo.values,
    )
    return classify_moving_pixels(
        metrics, (cfg.mask_tau1, cfg.mask_tau2, cfg.mask_tau3)
    )


def auxiliary_mask(
    bundle: GroundTruthBundle,
    cfg: PipelineConfig,
    index: int | None = None,
    precomputed_depths: dict | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Binary auxiliary moving-object mask for a keyframe.

    Classifies moving pixels on the keyframe and both temporal
    neighbors (where they exist), chains instances across the triplet,
    and keeps instances whose chain-averaged moving fraction clears the
    cutoff.
    """
    k = bundle.keyframe_index if index is None else index
    frame_ids = [i for i in (k - 1, k, k + 1) if 0 <= i < bundle.num_frames]
    moving_maps = {}
    for i in frame_ids:
        if i == 0 or i == bundle.num_frames - 1:
            # Border frames have no symmetric neighbor pair; skip their
            # pixel maps and let the chain average over the rest.
            continue
        depths = None if precomputed_depths is None else precomputed_depths.get(i)
        moving_maps[i] = moving_pixel_map(bundle, cfg, i, depths, threads=threads)
    chains = match_instances(
        bundle.instance_masks(k - 1) if k - 1 >= 0 else [],
        bundle.instance_masks(k),
        bundle.instance_masks(k + 1) if k + 1 < bundle.num_frames else [],
        min_iou=cfg.mask_min_iou,
    )
    return compose_aux_mask(
        chains,
        moving_maps,
        bundle.frames[k].shape,
        min_fraction=cfg.mask_min_moving_fraction,
    )


def depth_pyramid(values: np.ndarray, num_scales: int) -> list[np.ndarray]:
    """Per-scale inverse-depth maps derived by area averaging."""
    return map_pyramid(values, num_scales)
