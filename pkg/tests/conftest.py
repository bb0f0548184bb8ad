import numpy as np
import pytest

from sweeprec import synth
from sweeprec.config import PipelineConfig
from sweeprec.geometry import CameraIntrinsics, Frame, PoseSE3


@pytest.fixture(scope="session")
def standard_bundle():
    return synth.render(synth.standard_scene(seed=0))


@pytest.fixture(scope="session")
def static_bundle():
    return synth.render(synth.static_scene(seed=0))


@pytest.fixture(scope="session")
def two_box_bundle():
    return synth.render(synth.two_box_scene(seed=0))


@pytest.fixture(scope="session")
def default_config():
    return PipelineConfig().validate()


@pytest.fixture
def small_intrinsics():
    return CameraIntrinsics(fx=20.0, fy=18.0, cx=12.0, cy=8.0, width=24, height=16)


def smooth_random_image(rng, height, width, passes=3):
    """Band-limited random test image in [0.15, 0.85]."""
    img = rng.random((height, width))
    kernel = np.ones((3, 3)) / 9.0
    for _ in range(passes):
        padded = np.pad(img, 1, mode="edge")
        img = sum(
            padded[i : i + height, j : j + width] * kernel[i, j]
            for i in range(3)
            for j in range(3)
        )
    lo, hi = img.min(), img.max()
    return 0.15 + 0.7 * (img - lo) / max(hi - lo, 1e-9)


@pytest.fixture
def random_frame_pair(small_intrinsics):
    """A keyframe plus one laterally shifted source frame."""
    rng = np.random.default_rng(42)
    key = Frame(
        smooth_random_image(rng, 16, 24), small_intrinsics, PoseSE3.identity(),
        role="keyframe",
    )
    src = Frame(
        smooth_random_image(rng, 16, 24),
        small_intrinsics,
        PoseSE3(np.eye(3), np.array([0.1, 0.01, 0.0])),
        role="temporal",
    )
    return key, src
