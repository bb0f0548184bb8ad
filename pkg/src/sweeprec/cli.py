"""Command-line pipeline: synth, costvol, depth, masks, losses,
gradcheck, and eval subcommands over on-disk artifacts."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio, pipeline, synth
from .config import ConfigError, PipelineConfig, load_config, serialize_config
from .costvolume import apply_mask
from .depthmap import depth_to_pointcloud, wta_depth
from .evalmetrics import depth_metrics, mask_pr
from .geometry import CameraIntrinsics, Frame, PoseSE3
from .losses import (
    check_gradient,
    depth_refinement_loss,
    depth_refinement_loss_grad,
    frozen_reprojection_maps,
    mask_refinement_loss,
    multiscale_depth_loss,
    reprojection_loss,
    reprojection_loss_grad,
    reprojection_smooth_mask,
    smoothness_loss,
    smoothness_loss_grad,
    smoothness_smooth_mask,
    sparse_depth_loss,
    sparse_depth_loss_grad,
    SparseDepth,
)
from .photometric import _box_sum3


def _default_threads() -> int:
    env = os.environ.get("SWEEPREC_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    return cfg.validate()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config file (key = value lines)")
    p.add_argument(
        "--threads",
        type=int,
        default=_default_threads(),
        help="worker-thread cap (default from SWEEPREC_THREADS, else 1)",
    )


# ---------------------------------------------------------------------------
# synth


def _parse_scene_file(path) -> dict:
    fields = {"preset": "standard", "seed": 0}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        if key == "preset":
            fields["preset"] = value
        elif key == "seed":
            fields["seed"] = int(value)
        else:
            raise ConfigError(f"{path}:{ln}: unknown scene key {key!r}")
    if fields["preset"] not in synth.SCENE_PRESETS:
        raise ConfigError(
            f"{path}: unknown preset {fields['preset']!r}; "
            f"choose from {sorted(synth.SCENE_PRESETS)}"
        )
    return fields


def cmd_synth(args) -> int:
    if args.scene:
        fields = _parse_scene_file(args.scene)
        preset, seed = fields["preset"], fields["seed"]
    else:
        preset, seed = args.preset, args.seed
    spec = synth.SCENE_PRESETS[preset](seed=seed)
    bundle = synth.render(spec)
    synth.write_bundle(bundle, args.out)
    print(f"wrote bundle ({preset}, seed {seed}) to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# costvol


def cmd_costvol(args) -> int:
    cfg = _load_cfg(args)
    bundle = synth.read_bundle(args.bundle, keyframe_index=args.keyframe)
    num_sources = None if args.sources == "all" else int(args.sources)
    volume = pipeline.build_keyframe_volume(
        bundle,
        cfg,
        index=bundle.keyframe_index,
        stereo=args.stereo,
        num_sources=num_sources,
        threads=args.threads,
    )
    if args.mask and args.mask != "none":
        mask = fileio.read_mask_png(args.mask).astype(float)
        volume = apply_mask(volume, mask)
    fileio.write_volume(args.out, volume)
    print(f"wrote {volume.kind} volume to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# depth


def cmd_depth(args) -> int:
    volume = fileio.read_volume(args.volume)
    bundle = synth.read_bundle(args.bundle, keyframe_index=args.keyframe)
    dmap = wta_depth(volume)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_pfm(out / "depth.pfm", dmap.values)
    fileio.write_pfm(out / "confidence.pfm", dmap.confidence)
    points, colors = depth_to_pointcloud(dmap, bundle.keyframe, args.min_confidence)
    fileio.write_ply(out / "cloud.ply", points, colors)
    print(f"wrote depth map and {len(points)} points to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# masks


def cmd_masks(args) -> int:
    cfg = _load_cfg(args)
    bundle = synth.read_bundle(args.bundle, keyframe_index=args.keyframe)
    k = bundle.keyframe_index
    precomputed = {}
    if args.depths:
        droot = Path(args.depths)
        for i in range(bundle.num_frames):
            t_path = droot / f"depth_t_{i:02d}.pfm"
            s_path = droot / f"depth_s_{i:02d}.pfm"
            if t_path.exists() and s_path.exists():
                from .costvolume import DepthRange
                from .depthmap import InverseDepthMap

                drange = pipeline.depth_range_from_config(cfg)
                t_vals = fileio.read_pfm(t_path)
                s_vals = fileio.read_pfm(s_path)
                ones = np.ones(t_vals.shape)
                precomputed[i] = (
                    InverseDepthMap(t_vals, ones, drange),
                    InverseDepthMap(s_vals, ones.copy(), drange),
                )
    aux = pipeline.auxiliary_mask(
        bundle, cfg, index=k, precomputed_depths=precomputed or None, threads=args.threads
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"aux_mask_{k:02d}.png"
    fileio.write_mask_png(path, aux)
    print(f"wrote auxiliary mask to {path}")
    return 0


# ---------------------------------------------------------------------------
# losses


def _read_mask_arg(mask_arg, shape) -> np.ndarray:
    if mask_arg == "zero":
        return np.zeros(shape)
    mask = np.asarray(fileio.read_mask_png(mask_arg), dtype=float)
    if mask.shape != shape:
        raise ConfigError(f"mask shape {mask.shape} does not match frames {shape}")
    return mask


def cmd_losses(args) -> int:
    cfg = _load_cfg(args)
    bundle = synth.read_bundle(args.bundle, keyframe_index=args.keyframe)
    k = bundle.keyframe_index
    key = bundle.frames[k]
    temporal = [bundle.frames[i] for i in pipeline.temporal_source_indices(bundle, k, 2)]
    stereo = bundle.stereo_frames[k]
    weights = pipeline.loss_weights_from_config(cfg)
    num_scales = cfg.run_scales

    d_full = fileio.read_pfm(args.depth)
    inv_depths = pipeline.depth_pyramid(d_full, num_scales)

    if args.variant == "depth":
        report = multiscale_depth_loss(
            key, temporal, stereo, inv_depths, bundle.sparse, weights
        )
    elif args.variant == "dref":
        if not args.depth_stereo:
            raise ConfigError("--variant dref requires --depth-stereo")
        stereo_depths = pipeline.depth_pyramid(
            fileio.read_pfm(args.depth_stereo), num_scales
        )
        mask = _read_mask_arg(args.mask, key.shape)
        report = depth_refinement_loss(
            key,
            temporal,
            stereo,
            inv_depths,
            stereo_depths,
            mask,
            bundle.sparse,
            weights,
        )
    elif args.variant == "mref":
        if not args.depth_stereo:
            raise ConfigError("--variant mref requires --depth-stereo")
        stereo_depths = pipeline.depth_pyramid(
            fileio.read_pfm(args.depth_stereo), num_scales
        )
        mask = _read_mask_arg(args.mask, key.shape)
        aux = (
            fileio.read_mask_png(args.aux_mask)
            if args.aux_mask
            else bundle.moving[k]
        )
        static_maps = frozen_reprojection_maps(key, [stereo], stereo_depths, weights)
        temporal_maps = frozen_reprojection_maps(key, temporal, inv_depths, weights)
        report = mask_refinement_loss(
            mask, static_maps, temporal_maps, aux.astype(float), weights
        )
    else:
        raise ConfigError(f"unknown loss variant {args.variant!r}")

    fileio.write_loss_csv(args.out, report.rows(), report.total)
    print(f"wrote {args.variant} loss report to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# gradcheck


def gradient_check_setup(seed: int = 0, height: int = 16, width: int = 24):
    """A small random-but-smooth configuration for gradient checking."""
    rng = np.random.default_rng(seed)
    intr = CameraIntrinsics(
        fx=width * 0.9, fy=width * 0.9, cx=width / 2, cy=height / 2,
        width=width, height=height,
    )

    def smooth_image():
        raw = rng.random((height, width))
        for _ in range(3):
            raw = _box_sum3(raw) / _box_sum3(np.ones_like(raw))
        lo, hi = raw.min(), raw.max()
        return 0.15 + 0.7 * (raw - lo) / max(hi - lo, 1e-9)

    key = Frame(smooth_image(), intr, PoseSE3.identity(), role="keyframe")
    sources = []
    for dx in (-0.12, 0.12):
        pose = PoseSE3(np.eye(3), np.array([dx, 0.02 * dx, 0.0]))
        sources.append(Frame(smooth_image(), intr, pose, role="temporal"))
    inv_depth = 0.3 + 0.4 * rng.random((height, width))
    count = min(64, height * width // 6)
    us = rng.integers(0, width, count)
    vs = rng.integers(0, height, count)
    sparse = SparseDepth(
        pixels=np.stack([us, vs], axis=-1),
        inv_depths=np.clip(
            inv_depth[vs, us] + rng.normal(0, 0.05, count), 0.05, 1.5
        ),
    )
    mask = np.clip(
        _box_sum3(rng.random((height, width))) / 9.0, 0.05, 0.95
    )
    stereo_inv_depth = np.clip(inv_depth + rng.normal(0, 0.05, inv_depth.shape), 0.1, 1.2)
    return key, sources, inv_depth, sparse, mask, stereo_inv_depth


GRADCHECK_LOSSES = ("reprojection", "smoothness", "sparse", "dref")


def run_gradient_check(
    loss_name: str, seed: int = 0, max_pixels: int = 60
):
    """Max relative analytic-vs-central-difference error for one loss."""
    from .losses import LossWeights

    key, sources, inv_depth, sparse, mask, stereo_d = gradient_check_setup(seed)
    weights = LossWeights()
    rng = np.random.default_rng(seed + 1)

    if loss_name == "reprojection":
        _, grad = reprojection_loss_grad(key, sources, inv_depth, weights)
        smooth = reprojection_smooth_mask(key, sources, inv_depth, weights)

        def fn(d):
            return reprojection_loss(key, sources, d, weights)

    elif loss_name == "smoothness":
        _, grad = smoothness_loss_grad(inv_depth, key.image)
        smooth = smoothness_smooth_mask(inv_depth, key.image)

        def fn(d):
            return smoothness_loss(d, key.image)

    elif loss_name == "sparse":
        _, grad = sparse_depth_loss_grad(inv_depth, sparse)
        smooth = np.zeros(inv_depth.shape, dtype=bool)
        u, v = sparse.pixels[:, 0], sparse.pixels[:, 1]
        smooth[v, u] = np.abs(inv_depth[v, u] - sparse.inv_depths) > 1e-3

        def fn(d):
            return sparse_depth_loss(d, sparse)

    elif loss_name == "dref":
        stereo = sources[-1]
        temporal = sources[:-1]
        _, grad = depth_refinement_loss_grad(
            key, temporal, stereo, inv_depth, stereo_d, mask, sparse, weights
        )
        smooth = reprojection_smooth_mask(key, sources, inv_depth, weights)
        smooth &= smoothness_smooth_mask(inv_depth, key.image)
        smooth &= np.abs(inv_depth - stereo_d) > 1e-3
        u, v = sparse.pixels[:, 0], sparse.pixels[:, 1]
        bad = np.abs(inv_depth[v, u] - sparse.inv_depths) <= 1e-3
        smooth[v[bad], u[bad]] = False

        def fn(d):
            return depth_refinement_loss_grad(
                key, temporal, stereo, d, stereo_d, mask, sparse, weights
            )[0]

    else:
        raise ConfigError(
            f"unknown loss {loss_name!r}; choose from {GRADCHECK_LOSSES}"
        )

    candidates = np.argwhere(smooth)
    if len(candidates) == 0:
        raise ConfigError("no smooth pixels available for the gradient check")
    take = min(max_pixels, len(candidates))
    chosen = candidates[rng.choice(len(candidates), take, replace=False)]
    pixels = chosen[:, ::-1]  # (row, col) -> (u, v)
    return check_gradient(fn, grad, inv_depth, pixels)


def cmd_gradcheck(args) -> int:
    result = run_gradient_check(args.loss, seed=args.seed, max_pixels=args.pixels)
    print(f"loss {args.loss}: max_relative_error = {fileio.format_float(result.max_relative_error)}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    bundle = synth.read_bundle(args.bundle, keyframe_index=args.keyframe)
    k = bundle.keyframe_index
    pred = fileio.read_pfm(args.pred)
    gt_inv = bundle.inv_depths[k]
    gt_depth = np.where(gt_inv > 0, 1.0 / np.where(gt_inv > 0, gt_inv, 1.0), np.inf)
    metrics = depth_metrics(pred, gt_depth, cap=args.cap).as_dict()
    if args.pred_mask and args.gt_mask:
        p, r, f1 = mask_pr(
            fileio.read_mask_png(args.pred_mask), fileio.read_mask_png(args.gt_mask)
        )
        metrics.update({"mask_precision": p, "mask_recall": r, "mask_f1": f1})
    fileio.write_metrics_csv(args.out, args.label, metrics)
    print(f"wrote metrics to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sweeprec",
        description="Plane-sweep reconstruction pipeline on synthetic bundles",
    )
    parser.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the default configuration and exit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="render a scene spec into a bundle directory")
    p.add_argument("--scene", help="scene spec file (preset = ..., seed = ...)")
    p.add_argument("--preset", default="standard", choices=sorted(synth.SCENE_PRESETS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("costvol", help="build a cost volume from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keyframe", type=int, default=None)
    p.add_argument("--stereo", action="store_true", help="use the static stereo frame")
    p.add_argument("--sources", default="2", help="temporal source count or 'all'")
    p.add_argument("--mask", default="none", help="moving mask PNG for attenuation")
    _add_common(p)
    p.set_defaults(fn=cmd_costvol)

    p = sub.add_parser("depth", help="winner-take-all depth + point cloud from a volume")
    p.add_argument("--volume", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keyframe", type=int, default=None)
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.set_defaults(fn=cmd_depth)

    p = sub.add_parser("masks", help="auxiliary moving-object mask for the keyframe")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keyframe", type=int, default=None)
    p.add_argument("--depths", help="directory of precomputed depth_t_XX/depth_s_XX PFMs")
    _add_common(p)
    p.set_defaults(fn=cmd_masks)

    p = sub.add_parser("losses", help="evaluate a loss variant into a CSV report")
    p.add_argument("--bundle", required=True)
    p.add_argument("--depth", required=True, help="inverse-depth PFM (finest scale)")
    p.add_argument("--variant", required=True, choices=("depth", "mref", "dref"))
    p.add_argument("--mask", default="zero", help="moving mask PNG or 'zero'")
    p.add_argument("--depth-stereo", help="frozen stereo inverse-depth PFM")
    p.add_argument("--aux-mask", help="binary reference mask PNG (default: bundle GT)")
    p.add_argument("--out", required=True)
    p.add_argument("--keyframe", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_losses)

    p = sub.add_parser("gradcheck", help="verify a loss gradient against central differences")
    p.add_argument("--loss", required=True, choices=GRADCHECK_LOSSES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pixels", type=int, default=60)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("eval", help="depth metrics (and optional mask PR) vs ground truth")
    p.add_argument("--pred", required=True, help="predicted inverse-depth PFM")
    p.add_argument("--bundle", required=True)
    p.add_argument("--keyframe", type=int, default=None)
    p.add_argument("--cap", type=float, default=80.0)
    p.add_argument("--label", default="keyframe")
    p.add_argument("--pred-mask")
    p.add_argument("--gt-mask")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(serialize_config(PipelineConfig()))
        return 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error surface
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
