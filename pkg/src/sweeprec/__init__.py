"""Plane-sweep multi-view reconstruction toolkit.

SSIM-based cost volumes with consensus weighting, moving-object mask
generation from temporal/stereo inconsistency, winner-take-all depth
extraction, the semi-supervised loss stack, and a deterministic
synthetic-scene renderer that grounds the whole pipeline in tests.
"""

from .costvolume import CostVolume, DepthRange
from .geometry import CameraIntrinsics, Frame, PoseSE3
from .losses import LossReport, LossWeights, SparseDepth

__all__ = [
    "CameraIntrinsics",
    "CostVolume",
    "DepthRange",
    "Frame",
    "LossReport",
    "LossWeights",
    "PoseSE3",
    "SparseDepth",
]

__version__ = "0.1.0"
