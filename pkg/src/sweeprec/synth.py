"""Deterministic synthetic scenes with dense ground truth.

Scenes are unions of textured rectangles (walls, ground, box faces)
rendered by per-pixel ray casting with a z-buffer. Textures are smooth,
band-limited functions of the surface point in meters, so different
views of the same point agree photometrically and warped reprojections
with ground-truth depth are near-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .geometry import CameraIntrinsics, Frame, PoseSE3
from .losses import SparseDepth
from .maskgen import InstanceMask

_RAY_EPS = 1e-12
_NEAR_CLIP = 0.05


class SceneError(ValueError):
    """Degenerate or inconsistent scene description."""


@dataclass(frozen=True)
class ProceduralTexture:
    """Band-limited intensity pattern over surface coordinates (meters).

    A smooth sinusoidal checker plus a seeded sum of random-direction
    cosine waves. Wavelengths are chosen per surface so the projected
    pattern stays above the sampling limit everywhere visible; this is
    what keeps bilinear resampling error (and so ground-truth warp
    residuals) tiny while SSIM stays discriminative.
    """

    base: float = 0.5
    checker_amplitude: float = 0.0
    checker_wavelengths: tuple[float, float] = (1.0, 1.0)
    stripes: tuple[tuple[float, float, float], ...] = ()
    noise_amplitude: float = 0.0
    noise_wavelength_range: tuple[float, float] = (2.0, 4.0)
    noise_components: int = 4
    seed: int = 0

    def sample(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        out = np.full(np.shape(s), self.base)
        if self.checker_amplitude:
            ls, lt = self.checker_wavelengths
            out = out + self.checker_amplitude * np.sin(2 * np.pi * s / ls) * np.sin(
                2 * np.pi * t / lt
            )
        if self.stripes:
            rng = np.random.default_rng(self.seed + 1)
            for amp, lam, angle in self.stripes:
                rad = np.deg2rad(angle)
                freq = 2 * np.pi / lam
                phase = rng.uniform(0.0, 2 * np.pi)
                out = out + amp * np.sin(
                    freq * (np.cos(rad) * s + np.sin(rad) * t) + phase
                )
        if self.noise_amplitude and self.noise_components:
            rng = np.random.default_rng(self.seed)
            amp = self.noise_amplitude / np.sqrt(self.noise_components)
            lo, hi = self.noise_wavelength_range
            for _ in range(self.noise_components):
                lam = rng.uniform(lo, hi)
                theta = rng.uniform(0.0, 2 * np.pi)
                phase = rng.uniform(0.0, 2 * np.pi)
                freq = 2 * np.pi / lam
                out = out + amp * np.cos(
                    freq * (np.cos(theta) * s + np.sin(theta) * t) + phase
                )
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class TexturedRectangle:
    """A finite textured rectangle: origin + s * edge_s + t * edge_t.

    By default the texture is sampled in the rectangle's own (s, t)
    meters. `tex_frame` (origin, axis_s, axis_t) instead projects the 3-D
    surface point onto shared axes; rectangles sharing one frame and one
    texture are seamless across their junctions, which keeps bilinear
    resampling error away from material boundaries. The frame moves with
    the owning object.
    """

    origin: tuple[float, float, float]
    edge_s: tuple[float, float, float]
    edge_t: tuple[float, float, float]
    texture: ProceduralTexture
    tex_frame: (
        tuple[
            tuple[float, float, float],
            tuple[float, float, float],
            tuple[float, float, float],
        ]
        | None
    ) = None


@dataclass(frozen=True)
class SceneObject:
    """A named group of rectangles, optionally labeled and moving.

    `step_displacements` holds the world-space displacement applied
    between consecutive frames (length n_frames - 1); None means static.
    """

    name: str
    rectangles: tuple[TexturedRectangle, ...]
    instance_id: int | None = None
    class_label: str | None = None
    step_displacements: tuple[tuple[float, float, float], ...] | None = None

    def offset_at(self, frame_index: int) -> np.ndarray:
        if self.step_displacements is None:
            return np.zeros(3)
        steps = np.asarray(self.step_displacements, dtype=float)
        return steps[:frame_index].sum(axis=0) if frame_index else np.zeros(3)

    @property
    def is_mover(self) -> bool:
        return self.step_displacements is not None and bool(
            np.any(np.asarray(self.step_displacements))
        )


def make_box(
    center, half_extents, texture: ProceduralTexture
) -> tuple[TexturedRectangle, ...]:
    """Six textured faces of an axis-aligned box.

    All faces share one oblique texture frame so the pattern is
    continuous across the box edges.
    """
    c = np.asarray(center, dtype=float)
    h = np.asarray(half_extents, dtype=float)
    frame = (tuple(c), (1.0, 0.0, 1.0), (0.0, 1.0, 0.35))
    rects = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            normal = np.zeros(3)
            normal[axis] = sign
            a, b = (axis + 1) % 3, (axis + 2) % 3
            ea = np.zeros(3)
            eb = np.zeros(3)
            ea[a] = 2 * h[a]
            eb[b] = 2 * h[b]
            origin = c + normal * h - ea / 2 - eb / 2
            rects.append(
                TexturedRectangle(
                    origin=tuple(origin),
                    edge_s=tuple(ea),
                    edge_t=tuple(eb),
                    texture=texture,
                    tex_frame=frame,
                )
            )
    return tuple(rects)


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to render a multi-frame bundle deterministically."""

    seed: int
    objects: tuple[SceneObject, ...]
    camera_path: tuple[PoseSE3, ...]
    intrinsics: CameraIntrinsics
    stereo_baseline: float
    keyframe_index: int
    sparse_count: int = 300
    sparse_noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        n = len(self.camera_path)
        if n < 3:
            raise SceneError(f"need at least 3 frames, got {n}")
        if not 0 < self.keyframe_index < n - 1:
            raise SceneError("keyframe index must be interior")
        if not self.objects:
            raise SceneError("scene layout is empty")
        if not any(not o.is_mover for o in self.objects):
            raise SceneError("scene needs at least one static textured surface")
        for obj in self.objects:
            if obj.step_displacements is not None and len(obj.step_displacements) != n - 1:
                raise SceneError(
                    f"object {obj.name!r} needs {n - 1} step displacements"
                )
            if obj.is_mover and obj.instance_id is None:
                raise SceneError(f"mover {obj.name!r} must carry an instance id")
        if self.stereo_baseline <= 0:
            raise SceneError("stereo baseline must be positive")

    @property
    def num_frames(self) -> int:
        return len(self.camera_path)

    def stereo_pose(self, frame_index: int) -> PoseSE3:
        # Right camera: shifted by the baseline along the camera x-axis.
        shift = PoseSE3(np.eye(3), np.array([-self.stereo_baseline, 0.0, 0.0]))
        return shift.compose(self.camera_path[frame_index])


@dataclass
class GroundTruthBundle:
    """Rendered frames plus every ground-truth product tests rely on."""

    frames: list[Frame]
    stereo_frames: list[Frame]
    inv_depths: list[np.ndarray]
    stereo_inv_depths: list[np.ndarray]
    labels: list[np.ndarray]
    moving: list[np.ndarray]
    class_table: dict[int, str]
    sparse: SparseDepth
    keyframe_index: int
    stereo_labels: list[np.ndarray] | None = None
    spec: SceneSpec | None = None

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def keyframe(self) -> Frame:
        return self.frames[self.keyframe_index]

    @property
    def stereo_of_keyframe(self) -> Frame:
        return self.stereo_frames[self.keyframe_index]

    def temporal_neighbors(self, count: int = 2, index: int | None = None) -> list[int]:
        """Indices of the nearest temporal frames around a keyframe."""
        k = self.keyframe_index if index is None else index
        order = sorted(
            (i for i in range(self.num_frames) if i != k),
            key=lambda i: (abs(i - k), i),
        )
        picked = order if count is None else order[:count]
        return sorted(picked)

    def instance_masks(self, frame_index: int) -> list[InstanceMask]:
        labels = self.labels[frame_index]
        out = []
        for inst_id, cls in sorted(self.class_table.items()):
            pixels = labels == inst_id
            if pixels.any():
                out.append(
                    InstanceMask(
                        frame_index=frame_index,
                        instance_id=inst_id,
                        class_label=cls,
                        pixels=pixels,
                    )
                )
        return out


def _render_view(spec: SceneSpec, pose: PoseSE3, frame_index: int):
    intr = spec.intrinsics
    h, w = intr.height, intr.width
    cam_inv = pose.inverse()
    center = cam_inv.translation
    uu, vv = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    rays_cam = np.stack(
        [(uu - intr.cx) / intr.fx, (vv - intr.cy) / intr.fy, np.ones_like(uu)], axis=-1
    )
    rays_w = rays_cam @ cam_inv.rotation.T

    depth = np.full((h, w), np.inf)
    image = np.zeros((h, w))
    labels = np.zeros((h, w), dtype=int)
    for obj in spec.objects:
        offset = obj.offset_at(frame_index)
        inst = obj.instance_id or 0
        for rect in obj.rectangles:
            origin = np.asarray(rect.origin) + offset
            es = np.asarray(rect.edge_s, dtype=float)
            et = np.asarray(rect.edge_t, dtype=float)
            ls, lt = np.linalg.norm(es), np.linalg.norm(et)
            us, ut = es / ls, et / lt
            normal = np.cross(us, ut)
            denom = rays_w @ normal
            parallel = np.abs(denom) <= _RAY_EPS
            z = (normal @ (origin - center)) / np.where(parallel, 1.0, denom)
            z = np.where(parallel, np.inf, z)
            zq = np.where(np.isfinite(z), z, 0.0)
            q = center + zq[..., None] * rays_w - origin
            s = q @ us
            t = q @ ut
            hit = (
                (z > _NEAR_CLIP)
                & np.isfinite(z)
                & (s >= 0)
                & (s <= ls)
                & (t >= 0)
                & (t <= lt)
                & (z < depth)
            )
            if rect.tex_frame is not None:
                t_origin, t_axis_s, t_axis_t = rect.tex_frame
                point = q + origin - (np.asarray(t_origin) + offset)
                tex = rect.texture.sample(
                    point @ np.asarray(t_axis_s), point @ np.asarray(t_axis_t)
                )
            else:
                tex = rect.texture.sample(s, t)
            depth = np.where(hit, z, depth)
            image = np.where(hit, tex, image)
            labels = np.where(hit, inst, labels)
    inv_depth = np.where(np.isfinite(depth), 1.0 / np.where(depth > 0, depth, 1.0), 0.0)
    return image, inv_depth, labels


def sparse_samples(
    inv_depth: np.ndarray,
    count: int,
    noise_sigma: float,
    rng: np.random.Generator,
    exclude: np.ndarray | None = None,
) -> SparseDepth:
    """A random pixel subset of the ground-truth inverse depth.

    Mimics sparse odometry points: never drawn from mover pixels and
    never from pixels without depth. Optional Gaussian noise, clamped to
    stay positive.
    """
    usable = inv_depth > 0
    if exclude is not None:
        usable &= ~exclude
    candidates = np.flatnonzero(usable)
    if count > candidates.size:
        raise SceneError(
            f"requested {count} sparse samples but only {candidates.size} usable pixels"
        )
    if count == 0:
        return SparseDepth(
            pixels=np.zeros((0, 2), dtype=int), inv_depths=np.zeros(0)
        )
    chosen = rng.choice(candidates, size=count, replace=False)
    vs, us = np.unravel_index(chosen, inv_depth.shape)
    values = inv_depth[vs, us]
    if noise_sigma > 0:
        values = values + rng.normal(0.0, noise_sigma, size=values.shape)
    values = np.maximum(values, 1e-6)
    return SparseDepth(pixels=np.stack([us, vs], axis=-1), inv_depths=values)


def render(spec: SceneSpec) -> GroundTruthBundle:
    """Ray-cast every temporal and stereo view with full ground truth."""
    mover_ids = {o.instance_id for o in spec.objects if o.is_mover}
    class_table = {
        o.instance_id: o.class_label
        for o in spec.objects
        if o.instance_id is not None and o.class_label is not None
    }

    frames, stereo_frames = [], []
    inv_depths, stereo_inv_depths = [], []
    labels_all, stereo_labels = [], []
    moving = []
    for i in range(spec.num_frames):
        role = "keyframe" if i == spec.keyframe_index else "temporal"
        image, inv_depth, labels = _render_view(spec, spec.camera_path[i], i)
        frames.append(Frame(image, spec.intrinsics, spec.camera_path[i], role=role))
        inv_depths.append(inv_depth)
        labels_all.append(labels)
        moving.append(np.isin(labels, list(mover_ids)) if mover_ids else labels < 0)

        s_pose = spec.stereo_pose(i)
        s_image, s_inv, s_labels = _render_view(spec, s_pose, i)
        stereo_frames.append(
            Frame(s_image, spec.intrinsics, s_pose, role="static_stereo")
        )
        stereo_inv_depths.append(s_inv)
        stereo_labels.append(s_labels)

    sparse_rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(1)[0])
    sparse = sparse_samples(
        inv_depths[spec.keyframe_index],
        spec.sparse_count,
        spec.sparse_noise_sigma,
        sparse_rng,
        exclude=moving[spec.keyframe_index],
    )
    return GroundTruthBundle(
        frames=frames,
        stereo_frames=stereo_frames,
        inv_depths=inv_depths,
        stereo_inv_depths=stereo_inv_depths,
        labels=labels_all,
        moving=moving,
        class_table=class_table,
        sparse=sparse,
        keyframe_index=spec.keyframe_index,
        stereo_labels=stereo_labels,
        spec=spec,
    )


# ---------------------------------------------------------------------------
# Reference scenes


def _lateral_path(num_frames: int, spacing: float) -> tuple[PoseSE3, ...]:
    mid = (num_frames - 1) / 2.0
    poses = []
    for i in range(num_frames):
        x = (i - mid) * spacing
        poses.append(PoseSE3(np.eye(3), np.array([-x, 0.0, 0.0])))
    return tuple(poses)


def standard_scene(
    seed: int = 0, mover: bool = True, extra_static_box: bool = False
) -> SceneSpec:
    """The repo's fixed test scene (128x64): ground, two walls, one box.

    The box crosses the view over 5 frames with an uneven stride so the
    two temporal pairs see different apparent depths; with `mover` False
    the same geometry is rendered fully static.
    """
    tex_seed = 1_000_003 * seed

    # One texture field, sampled on shared oblique world axes, covers the
    # ground and both walls: the pattern is continuous across every
    # junction, so no resampling-hostile intensity step exists anywhere
    # except at true occlusion silhouettes. The axes are tilted so the
    # field varies slowly along the ground's depth direction (where the
    # pixel footprint is large) while staying dense horizontally.
    structure_texture = ProceduralTexture(
        base=0.5,
        checker_amplitude=0.15,
        checker_wavelengths=(1.6, 1.5),
        noise_amplitude=0.05,
        noise_wavelength_range=(1.4, 2.8),
        seed=tex_seed + 1,
    )
    structure_frame = ((0.0, 0.0, 0.0), (1.0, 0.0, 0.3), (0.0, 1.0, 0.35))

    def structure_rect(origin, edge_s, edge_t):
        return TexturedRectangle(
            origin=origin,
            edge_s=edge_s,
            edge_t=edge_t,
            texture=structure_texture,
            tex_frame=structure_frame,
        )

    # Surfaces that meet are extended a couple of centimeters past each
    # other so the z-buffer never has to break a tie between coincident
    # planes (ties would resolve differently from different viewpoints
    # and break photometric consistency along the seams).
    ground = SceneObject(
        name="ground",
        rectangles=(
            structure_rect((-6.0, 1.2, 0.8), (12.0, 0.0, 0.0), (0.0, 0.0, 3.74)),
        ),
    )
    back_wall = SceneObject(
        name="back_wall",
        rectangles=(
            structure_rect((-6.0, -3.0, 4.5), (12.0, 0.0, 0.0), (0.0, 4.2, 0.0)),
        ),
    )
    side_wall = SceneObject(
        name="side_wall",
        rectangles=(
            structure_rect((-3.8, -3.0, 2.3), (2.6, 0.0, 2.25), (0.0, 4.2, 0.0)),
        ),
    )

    box_texture = ProceduralTexture(
        base=0.5,
        checker_amplitude=0.18,
        checker_wavelengths=(0.55, 0.55),
        noise_amplitude=0.04,
        noise_wavelength_range=(0.4, 0.9),
        seed=tex_seed + 4,
    )
    # Uneven stride: the pre-keyframe pairs see a different apparent
    # depth than the post-keyframe pairs, so per-pair volumes disagree.
    steps = ((-0.18, 0.0, 0.0), (-0.18, 0.0, 0.0), (-0.42, 0.0, 0.0), (-0.42, 0.0, 0.0))
    # A thin slab: deep boxes expose grazing side faces whose aliased
    # projection contaminates photometric-consistency measurements.
    box = SceneObject(
        name="crossing_box",
        rectangles=make_box((1.16, 0.79, 3.0), (0.62, 0.42, 0.04), box_texture),
        instance_id=1,
        class_label="box",
        step_displacements=steps if mover else None,
    )

    objects = [ground, back_wall, side_wall, box]
    if extra_static_box:
        objects.append(
            SceneObject(
                name="parked_box",
                rectangles=make_box(
                    (-1.7, 0.81, 3.4),
                    (0.45, 0.4, 0.04),
                    ProceduralTexture(
                        base=0.5,
                        checker_amplitude=0.18,
                        checker_wavelengths=(0.5, 0.5),
                        noise_amplitude=0.04,
                        noise_wavelength_range=(0.4, 0.8),
                        seed=tex_seed + 5,
                    ),
                ),
                instance_id=2,
                class_label="box",
            )
        )

    return SceneSpec(
        seed=seed,
        objects=tuple(objects),
        camera_path=_lateral_path(5, 0.25),
        intrinsics=CameraIntrinsics(fx=64.0, fy=64.0, cx=64.0, cy=32.0, width=128, height=64),
        stereo_baseline=0.3,
        keyframe_index=2,
    )


def static_scene(seed: int = 0) -> SceneSpec:
    """The standard scene with the box parked (nothing moves)."""
    return standard_scene(seed=seed, mover=False)


def two_box_scene(seed: int = 0) -> SceneSpec:
    """Standard scene plus a second, static movable-class box."""
    return standard_scene(seed=seed, mover=True, extra_static_box=True)


SCENE_PRESETS = {
    "standard": standard_scene,
    "static": static_scene,
    "two_box": two_box_scene,
}


# ---------------------------------------------------------------------------
# Ground-truth consistency checks


def occlusion_free_static_mask(
    bundle: GroundTruthBundle, src_index: int, stereo: bool = False
) -> np.ndarray:
    """Keyframe pixels that are static and visible in the given source.

    Uses the classic depth-consistency test: the keyframe pixel's point,
    expressed in the source camera, must agree with the source's own
    ground-truth depth at the corresponding pixel.
    """
    from .geometry import warp_coordinates

    k = bundle.keyframe_index
    key = bundle.keyframe
    src = bundle.stereo_frames[src_index] if stereo else bundle.frames[src_index]
    src_inv = (
        bundle.stereo_inv_depths[src_index] if stereo else bundle.inv_depths[src_index]
    )
    inv_gt = bundle.inv_depths[k]
    valid_gt = inv_gt > 0
    safe_inv = np.where(valid_gt, inv_gt, 1.0)
    coords, in_front, _ = warp_coordinates(src, key, safe_inv)

    h, w = key.shape
    inside = (
        (coords[..., 0] >= 0)
        & (coords[..., 0] <= w - 1)
        & (coords[..., 1] >= 0)
        & (coords[..., 1] <= h - 1)
    )
    # Expected source depth of the keyframe point.
    rel = src.pose.compose(key.pose.inverse())
    rays = np.stack(
        [
            (np.arange(w)[None, :].repeat(h, 0) - key.intrinsics.cx) / key.intrinsics.fx,
            (np.arange(h)[:, None].repeat(w, 1) - key.intrinsics.cy) / key.intrinsics.fy,
            np.ones((h, w)),
        ],
        axis=-1,
    )
    pts = (rays @ rel.rotation.T) / safe_inv[..., None] + rel.translation
    z_expected = pts[..., 2]

    # Every pixel in the bilinear support must be depth-consistent (and
    # off movers): samples blending across an occlusion silhouette are
    # occlusion-affected even when the nearest pixel agrees.
    u0 = np.clip(np.floor(coords[..., 0]).astype(int), 0, w - 1)
    v0 = np.clip(np.floor(coords[..., 1]).astype(int), 0, h - 1)
    fu = coords[..., 0] - np.floor(coords[..., 0])
    fv = coords[..., 1] - np.floor(coords[..., 1])
    consistent = np.ones((h, w), dtype=bool)
    clean = np.ones((h, w), dtype=bool)
    src_moving = None if stereo else bundle.moving[src_index]
    for du, dv, wgt in ((0, 0, (1 - fu) * (1 - fv)), (1, 0, fu * (1 - fv)),
                        (0, 1, (1 - fu) * fv), (1, 1, fu * fv)):
        uu = np.clip(u0 + du, 0, w - 1)
        vv = np.clip(v0 + dv, 0, h - 1)
        used = wgt > 1e-9
        s_inv = src_inv[vv, uu]
        s_depth = np.where(s_inv > 0, 1.0 / np.where(s_inv > 0, s_inv, 1.0), np.inf)
        consistent &= ~used | (np.abs(s_depth - z_expected) <= 0.03 * z_expected)
        if src_moving is not None:
            clean &= ~used | ~src_moving[vv, uu]

    mask = valid_gt & in_front & inside & consistent & clean & ~bundle.moving[k]
    return mask


def static_reprojection_residual(
    bundle: GroundTruthBundle, src_index: int, stereo: bool = False
) -> float:
    """Mean |warped - keyframe| over static, non-occluded, valid pixels."""
    from .geometry import warp_to_keyframe

    k = bundle.keyframe_index
    key = bundle.keyframe
    src = bundle.stereo_frames[src_index] if stereo else bundle.frames[src_index]
    inv_gt = bundle.inv_depths[k]
    safe_inv = np.where(inv_gt > 0, inv_gt, 1.0)
    warped, valid = warp_to_keyframe(src, key, safe_inv)
    mask = occlusion_free_static_mask(bundle, src_index, stereo=stereo) & valid
    if not mask.any():
        raise SceneError("no static non-occluded pixels to evaluate")
    diff = np.abs(warped - key.image)
    if diff.ndim == 3:
        diff = diff.mean(axis=2)
    return float(diff[mask].mean())


# ---------------------------------------------------------------------------
# Bundle directory IO


def write_bundle(bundle: GroundTruthBundle, path) -> None:
    root = Path(path)
    for sub in ("images", "depth", "instances", "moving"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    poses = []
    for i, frame in enumerate(bundle.frames):
        fileio.write_image_png(root / "images" / f"frame_{i:02d}.png", frame.image)
        fileio.write_pfm(root / "depth" / f"frame_{i:02d}.pfm", bundle.inv_depths[i])
        fileio.write_instance_png(
            root / "instances" / f"frame_{i:02d}.png", bundle.labels[i]
        )
        fileio.write_mask_png(root / "moving" / f"frame_{i:02d}.png", bundle.moving[i])
        poses.append(frame.pose)
    for i, frame in enumerate(bundle.stereo_frames):
        fileio.write_image_png(root / "images" / f"stereo_{i:02d}.png", frame.image)
        fileio.write_pfm(
            root / "depth" / f"stereo_{i:02d}.pfm", bundle.stereo_inv_depths[i]
        )
        poses.append(frame.pose)
    fileio.write_poses(root / "poses.txt", poses)
    fileio.write_intrinsics(root / "intrinsics.txt", bundle.frames[0].intrinsics)
    (root / "instances" / "classes.txt").write_text(
        "".join(f"{k} {v}\n" for k, v in sorted(bundle.class_table.items()))
    )
    fileio.write_sparse_csv(
        root / "sparse.csv", bundle.sparse.pixels, bundle.sparse.inv_depths
    )


def read_bundle(path, keyframe_index: int | None = None) -> GroundTruthBundle:
    root = Path(path)
    frame_files = sorted((root / "images").glob("frame_*.png"))
    stereo_files = sorted((root / "images").glob("stereo_*.png"))
    if not frame_files:
        raise SceneError(f"{root}: no temporal frames found")
    n = len(frame_files)
    if keyframe_index is None:
        keyframe_index = n // 2
    intr = fileio.read_intrinsics(root / "intrinsics.txt")
    poses = fileio.read_poses(root / "poses.txt")
    if len(poses) != n + len(stereo_files):
        raise SceneError(f"{root}: pose count does not match image count")

    class_table = {}
    classes_path = root / "instances" / "classes.txt"
    if classes_path.exists():
        for line in classes_path.read_text().splitlines():
            if line.strip():
                ident, _, label = line.partition(" ")
                class_table[int(ident)] = label.strip()

    frames, inv_depths, labels, moving = [], [], [], []
    for i in range(n):
        image = fileio.read_image_png(root / "images" / f"frame_{i:02d}.png")
        role = "keyframe" if i == keyframe_index else "temporal"
        frames.append(Frame(image, intr, poses[i], role=role))
        inv_depths.append(fileio.read_pfm(root / "depth" / f"frame_{i:02d}.pfm"))
        labels.append(fileio.read_instance_png(root / "instances" / f"frame_{i:02d}.png"))
        moving.append(fileio.read_mask_png(root / "moving" / f"frame_{i:02d}.png"))
    stereo_frames, stereo_inv_depths = [], []
    for j in range(len(stereo_files)):
        image = fileio.read_image_png(root / "images" / f"stereo_{j:02d}.png")
        stereo_frames.append(Frame(image, intr, poses[n + j], role="static_stereo"))
        stereo_inv_depths.append(fileio.read_pfm(root / "depth" / f"stereo_{j:02d}.pfm"))

    pixels, depths = fileio.read_sparse_csv(root / "sparse.csv")
    return GroundTruthBundle(
        frames=frames,
        stereo_frames=stereo_frames,
        inv_depths=inv_depths,
        stereo_inv_depths=stereo_inv_depths,
        labels=labels,
        moving=moving,
        class_table=class_table,
        sparse=SparseDepth(pixels=pixels, inv_depths=depths),
        keyframe_index=keyframe_index,
    )
