"""Pinhole cameras, SE(3) poses, and inverse-depth image warping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Camera-space points closer to the image plane than this are treated as
# behind the camera during warping rather than raising: plane sweeps
# legitimately push near-camera depth hypotheses behind other views.
MIN_FORWARD_DEPTH = 1e-6

_ORTHONORMALITY_TOL = 1e-9

FRAME_ROLES = ("keyframe", "temporal", "static_stereo")


class GeometryError(ValueError):
    """An input violates a geometric precondition."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixel units for an undistorted camera."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError(
                f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}"
            )
        if not (0 < self.cx < self.width) or not (0 < self.cy < self.height):
            raise GeometryError("principal point must lie inside the image")

    def halved(self) -> "CameraIntrinsics":
        """Intrinsics of the same camera after 2x2 area downsampling.

        The half-pixel shift keeps pixel centers aligned between scales.
        """
        return CameraIntrinsics(
            fx=self.fx / 2.0,
            fy=self.fy / 2.0,
            cx=(self.cx + 0.5) / 2.0 - 0.5,
            cy=(self.cy + 0.5) / 2.0 - 0.5,
            width=self.width // 2,
            height=self.height // 2,
        )


@dataclass(frozen=True)
class PoseSE3:
    """Rigid transform: x -> rotation @ x + translation.

    Poses stored on frames are world-to-camera.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        rot = np.array(self.rotation, dtype=float)
        tra = np.array(self.translation, dtype=float).reshape(3)
        if rot.shape != (3, 3):
            raise GeometryError(f"rotation must be 3x3, got {rot.shape}")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > _ORTHONORMALITY_TOL:
            raise GeometryError("rotation matrix is not orthonormal")
        if np.linalg.det(rot) < 0:
            raise GeometryError("rotation must be proper (det = +1)")
        rot.setflags(write=False)
        tra.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tra)

    @staticmethod
    def identity() -> "PoseSE3":
        return PoseSE3(np.eye(3), np.zeros(3))

    def compose(self, other: "PoseSE3") -> "PoseSE3":
        """Return the transform applying `other` first, then `self`."""
        return PoseSE3(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "PoseSE3":
        return PoseSE3(self.rotation.T, -(self.rotation.T @ self.translation))

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply to an array of points with shape (..., 3)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def matrix34(self) -> np.ndarray:
        return np.hstack([self.rotation, self.translation.reshape(3, 1)])

    @staticmethod
    def from_matrix34(mat: np.ndarray) -> "PoseSE3":
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (3, 4):
            raise GeometryError(f"pose matrix must be 3x4, got {mat.shape}")
        return PoseSE3(mat[:, :3], mat[:, 3])

    def is_identity(self) -> bool:
        return np.array_equal(self.rotation, np.eye(3)) and not self.translation.any()


@dataclass(frozen=True)
class Frame:
    """An image plus the camera that captured it.

    `image` is (H, W) or (H, W, C) with intensities in [0, 1]; values are
    clamped on construction. `pose` maps world points into this camera.
    """

    image: np.ndarray
    intrinsics: CameraIntrinsics
    pose: PoseSE3
    role: str = "temporal"

    def __post_init__(self) -> None:
        img = np.clip(np.asarray(self.image, dtype=float), 0.0, 1.0)
        if img.ndim not in (2, 3):
            raise GeometryError(f"image must be 2-D or 3-D, got ndim={img.ndim}")
        h, w = img.shape[:2]
        if (h, w) != (self.intrinsics.height, self.intrinsics.width):
            raise GeometryError(
                f"image size {(h, w)} does not match intrinsics "
                f"{(self.intrinsics.height, self.intrinsics.width)}"
            )
        if self.role not in FRAME_ROLES:
            raise GeometryError(f"unknown frame role {self.role!r}")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape[0], self.image.shape[1]


def project(intrinsics: CameraIntrinsics, points: np.ndarray):
    """Project camera-space points (..., 3) to pixels.

    Returns:
        (pixels, depth): pixel coordinates (..., 2) as (u, v) and the
        camera-space depth (...,).

    Raises:
        GeometryError: if any point has non-positive depth (behind camera).
    """
    pts = np.asarray(points, dtype=float)
    z = pts[..., 2]
    if np.any(z <= 0):
        raise GeometryError("cannot project point behind camera (z <= 0)")
    u = intrinsics.fx * pts[..., 0] / z + intrinsics.cx
    v = intrinsics.fy * pts[..., 1] / z + intrinsics.cy
    return np.stack([u, v], axis=-1), z


def backproject(
    intrinsics: CameraIntrinsics, pixels: np.ndarray, inv_depth
) -> np.ndarray:
    """Lift pixels (..., 2) at the given inverse depth into camera space."""
    px = np.asarray(pixels, dtype=float)
    d = np.asarray(inv_depth, dtype=float)
    if np.any(d <= 0):
        raise GeometryError("inverse depth must be positive")
    x = (px[..., 0] - intrinsics.cx) / intrinsics.fx
    y = (px[..., 1] - intrinsics.cy) / intrinsics.fy
    rays = np.stack([x, y, np.ones_like(x)], axis=-1)
    return rays / d[..., None] if d.ndim else rays / d


def bilinear_sample(image: np.ndarray, coords: np.ndarray):
    """Sample an image at continuous (u, v) positions.

    A sample is valid only when it lies inside the hull of pixel centers,
    [0, W-1] x [0, H-1]; everything the interpolation actually touches is
    then in bounds. Invalid samples get value 0 and valid=False rather
    than clamped values, so consumers can exclude them.

    Returns:
        (values, valid) with values shaped like coords[..., 0] (plus a
        trailing channel axis for multi-channel images).
    """
    img = np.asarray(image, dtype=float)
    uv = np.asarray(coords, dtype=float)
    u = uv[..., 0]
    v = uv[..., 1]
    h, w = img.shape[:2]
    valid = (u >= 0) & (u <= w - 1) & (v >= 0) & (v <= h - 1)

    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = u - u0
    fv = v - v0
    x0 = np.clip(u0.astype(int), 0, w - 1)
    y0 = np.clip(v0.astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)

    w00 = (1.0 - fu) * (1.0 - fv)
    w10 = fu * (1.0 - fv)
    w01 = (1.0 - fu) * fv
    w11 = fu * fv
    if img.ndim == 3:
        w00, w10, w01, w11 = (x[..., None] for x in (w00, w10, w01, w11))
    values = (
        w00 * img[y0, x0] + w10 * img[y0, x1] + w01 * img[y1, x0] + w11 * img[y1, x1]
    )
    mask = valid[..., None] if img.ndim == 3 else valid
    return np.where(mask, values, 0.0), valid


def _keyframe_rays(intrinsics: CameraIntrinsics) -> np.ndarray:
    """Unit-depth camera rays for every pixel center, shape (H, W, 3)."""
    uu, vv = np.meshgrid(
        np.arange(intrinsics.width, dtype=float),
        np.arange(intrinsics.height, dtype=float),
    )
    x = (uu - intrinsics.cx) / intrinsics.fx
    y = (vv - intrinsics.cy) / intrinsics.fy
    return np.stack([x, y, np.ones_like(x)], axis=-1)


def _as_inv_depth_map(inv_depth, intrinsics: CameraIntrinsics) -> np.ndarray:
    inv = np.asarray(inv_depth, dtype=float)
    shape = (intrinsics.height, intrinsics.width)
    if inv.ndim == 0:
        inv = np.full(shape, float(inv))
    if inv.shape != shape:
        raise GeometryError(
            f"inverse depth shape {inv.shape} does not match keyframe {shape}"
        )
    if np.any(inv <= 0):
        raise GeometryError("inverse depth must be positive")
    return inv


def warp_to_keyframe(src: Frame, key: Frame, inv_depth):
    """Warp `src` into the keyframe at the given inverse depth.

    Every keyframe pixel is backprojected at `inv_depth` (a scalar or an
    (H, W) map), moved through the relative pose, projected into `src`,
    and sampled bilinearly. Pixels are invalid where the transformed
    point lies behind `src` or the sample falls outside it.

    Returns:
        (warped, valid): warped image shaped like the keyframe image and
        a boolean (H, W) validity mask.
    """
    warped, valid, _ = _warp_impl(src, key, inv_depth, want_jacobian=False)
    return warped, valid


def warp_to_keyframe_with_jacobian(src: Frame, key: Frame, inv_depth):
    """Like warp_to_keyframe, also returning d(warped)/d(inv_depth).

    The Jacobian is per pixel (each warped pixel depends only on its own
    inverse depth) and is zero at invalid pixels.
    """
    return _warp_impl(src, key, inv_depth, want_jacobian=True)


def _warp_impl(src: Frame, key: Frame, inv_depth, want_jacobian: bool):
    inv = _as_inv_depth_map(inv_depth, key.intrinsics)
    relative = src.pose.compose(key.pose.inverse())

    if relative.is_identity() and src.intrinsics == key.intrinsics:
        # Exact fast path: identity relative pose warps every pixel onto
        # itself regardless of depth.
        warped = src.image.copy()
        valid = np.ones(key.shape, dtype=bool)
        jac = np.zeros_like(warped) if want_jacobian else None
        return warped, valid, jac

    rays = _keyframe_rays(key.intrinsics)
    rot_rays = rays @ relative.rotation.T
    pts = rot_rays / inv[..., None] + relative.translation
    z = pts[..., 2]
    in_front = z > MIN_FORWARD_DEPTH
    zs = np.where(in_front, z, 1.0)
    fx, fy = src.intrinsics.fx, src.intrinsics.fy
    u = fx * pts[..., 0] / zs + src.intrinsics.cx
    v = fy * pts[..., 1] / zs + src.intrinsics.cy

    values, sample_ok = bilinear_sample(src.image, np.stack([u, v], axis=-1))
    valid = in_front & sample_ok
    mask = valid[..., None] if values.ndim == 3 else valid
    warped = np.where(mask, values, 0.0)
    if not want_jacobian:
        return warped, valid, None

    # d(point)/d(inv_depth) = -rot_rays / inv^2, chained through the
    # projection and the bilinear weights.
    dp = -rot_rays / (inv * inv)[..., None]
    du_dd = fx * (dp[..., 0] * zs - pts[..., 0] * dp[..., 2]) / (zs * zs)
    dv_dd = fy * (dp[..., 1] * zs - pts[..., 1] * dp[..., 2]) / (zs * zs)

    img = np.asarray(src.image, dtype=float)
    h, w = img.shape[:2]
    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = u - u0
    fv = v - v0
    x0 = np.clip(u0.astype(int), 0, w - 1)
    y0 = np.clip(v0.astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    if img.ndim == 3:
        fu_, fv_ = fu[..., None], fv[..., None]
    else:
        fu_, fv_ = fu, fv
    dval_du = (1.0 - fv_) * (img[y0, x1] - img[y0, x0]) + fv_ * (
        img[y1, x1] - img[y1, x0]
    )
    dval_dv = (1.0 - fu_) * (img[y1, x0] - img[y0, x0]) + fu_ * (
        img[y1, x1] - img[y0, x1]
    )
    if img.ndim == 3:
        jac = dval_du * du_dd[..., None] + dval_dv * dv_dd[..., None]
    else:
        jac = dval_du * du_dd + dval_dv * dv_dd
    jac = np.where(mask, jac, 0.0)
    return warped, valid, jac


def warp_coordinates(src: Frame, key: Frame, inv_depth):
    """Source-image (u, v) coordinates each keyframe pixel warps to.

    Returns (coords (H, W, 2), in_front (H, W), coord_jac (H, W, 2))
    where coord_jac holds d(u, v)/d(inv_depth); used by smoothness
    filters and occlusion checks that need the raw sample positions.
    """
    inv = _as_inv_depth_map(inv_depth, key.intrinsics)
    relative = src.pose.compose(key.pose.inverse())
    rays = _keyframe_rays(key.intrinsics)
    rot_rays = rays @ relative.rotation.T
    pts = rot_rays / inv[..., None] + relative.translation
    z = pts[..., 2]
    in_front = z > MIN_FORWARD_DEPTH
    zs = np.where(in_front, z, 1.0)
    fx, fy = src.intrinsics.fx, src.intrinsics.fy
    u = fx * pts[..., 0] / zs + src.intrinsics.cx
    v = fy * pts[..., 1] / zs + src.intrinsics.cy
    dp = -rot_rays / (inv * inv)[..., None]
    du_dd = fx * (dp[..., 0] * zs - pts[..., 0] * dp[..., 2]) / (zs * zs)
    dv_dd = fy * (dp[..., 1] * zs - pts[..., 1] * dp[..., 2]) / (zs * zs)
    return (
        np.stack([u, v], axis=-1),
        in_front,
        np.stack([du_dd, dv_dd], axis=-1),
    )
