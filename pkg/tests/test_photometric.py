import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweeprec.photometric import (
    SSIM_C1,
    SSIM_C2,
    DimensionError,
    local_std,
    photometric_error_map,
    ssim_map,
    ssim_map_backward,
    textured_mask,
)


def ssim_reference(a, b, valid=None):
    """Loop-based oracle: statistics over the valid 3x3 sub-window."""
    h, w = a.shape
    weights = np.ones((h, w)) if valid is None else valid.astype(float)
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            ys = slice(max(0, y - 1), min(h, y + 2))
            xs = slice(max(0, x - 1), min(w, x + 2))
            wv = weights[ys, xs]
            n = wv.sum()
            if n == 0:
                out[y, x] = 1.0
                continue
            pa = a[ys, xs]
            pb = b[ys, xs]
            ma = (wv * pa).sum() / n
            mb = (wv * pb).sum() / n
            va = (wv * pa * pa).sum() / n - ma * ma
            vb = (wv * pb * pb).sum() / n - mb * mb
            cab = (wv * pa * pb).sum() / n - ma * mb
            out[y, x] = ((2 * ma * mb + SSIM_C1) * (2 * cab + SSIM_C2)) / (
                (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2)
            )
    return np.clip(out, -1.0, 1.0)


class TestSSIM:
    def test_self_similarity_is_exactly_one(self):
        rng = np.random.default_rng(0)
        img = rng.random((10, 14))
        assert np.array_equal(ssim_map(img, img), np.ones((10, 14)))

    def test_constant_patch_closed_form(self):
        a = np.full((8, 8), 0.2)
        b = np.full((8, 8), 0.8)
        expected = (2 * 0.2 * 0.8 + SSIM_C1) / (0.2**2 + 0.8**2 + SSIM_C1)
        assert np.allclose(ssim_map(a, b), expected, atol=1e-12)

    def test_anticorrelated_is_negative(self):
        x = np.linspace(0, 6 * np.pi, 16)
        a = 0.5 + 0.4 * np.sin(x)[None, :].repeat(12, axis=0)
        b = 1.0 - a
        s = ssim_map(a, b)
        assert (s[2:-2, 2:-2] < 0).mean() > 0.8

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(1)
        a = rng.random((9, 12))
        b = rng.random((9, 12))
        assert np.max(np.abs(ssim_map(a, b) - ssim_reference(a, b))) < 1e-12

    def test_matches_loop_oracle_with_validity(self):
        rng = np.random.default_rng(2)
        a = rng.random((9, 12))
        b = rng.random((9, 12))
        valid = rng.random((9, 12)) > 0.3
        got = ssim_map(a, b, valid=valid)
        want = ssim_reference(a, b, valid=valid)
        assert np.max(np.abs(got[valid] - want[valid])) < 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = rng.random((8, 11))
        b = rng.random((8, 11))
        assert np.max(np.abs(ssim_map(a, b) - ssim_map(b, a))) < 1e-12

    def test_multichannel_averages_channels(self):
        rng = np.random.default_rng(4)
        a = rng.random((6, 7, 3))
        b = rng.random((6, 7, 3))
        per_channel = np.stack(
            [ssim_reference(a[..., c], b[..., c]) for c in range(3)]
        ).mean(axis=0)
        assert np.max(np.abs(ssim_map(a, b) - per_channel)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            ssim_map(np.ones((4, 4)), np.ones((4, 5)))

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_range_property(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.random((6, 8))
        b = rng.random((6, 8))
        s = ssim_map(a, b)
        assert np.all(s >= -1.0) and np.all(s <= 1.0)


class TestPhotometricErrorMap:
    def test_identical_images_zero(self):
        rng = np.random.default_rng(5)
        img = rng.random((7, 9))
        err = photometric_error_map(img, img)
        assert np.array_equal(err.values, np.zeros((7, 9)))
        assert err.valid.all()

    def test_definitional_identity(self):
        rng = np.random.default_rng(6)
        a = rng.random((8, 10))
        b = rng.random((8, 10))
        err = photometric_error_map(a, b)
        assert np.array_equal(err.values, (1.0 - ssim_map(a, b)) / 2.0)

    def test_invalid_pixels_carry_one(self):
        rng = np.random.default_rng(7)
        a = rng.random((8, 10))
        b = rng.random((8, 10))
        valid = rng.random((8, 10)) > 0.5
        err = photometric_error_map(a, b, valid=valid)
        assert np.all(err.values[~valid] == 1.0)
        assert np.array_equal(err.valid, valid)

    def test_anticorrelated_near_clamp_boundary(self):
        x = np.linspace(0, 8 * np.pi, 24)
        a = 0.5 + 0.45 * np.sin(x)[None, :].repeat(16, axis=0)
        err = photometric_error_map(a, 1.0 - a)
        assert np.all(err.values <= 1.0)
        assert err.values[4:-4, 4:-4].max() > 0.9

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_range_property(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.random((5, 9))
        b = rng.random((5, 9))
        err = photometric_error_map(a, b)
        assert np.all(err.values >= 0.0) and np.all(err.values <= 1.0)


class TestSSIMBackward:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        a = 0.2 + 0.6 * rng.random((7, 9))
        b = 0.2 + 0.6 * rng.random((7, 9))
        g = rng.normal(0, 1, (7, 9))
        grad = ssim_map_backward(a, b, g)
        h = 1e-7
        for y, x in [(0, 0), (3, 4), (6, 8), (2, 7)]:
            ap = a.copy()
            ap[y, x] += h
            am = a.copy()
            am[y, x] -= h
            fd = ((ssim_map(ap, b) * g).sum() - (ssim_map(am, b) * g).sum()) / (2 * h)
            assert grad[y, x] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_with_validity_mask(self):
        rng = np.random.default_rng(9)
        a = 0.2 + 0.6 * rng.random((6, 8))
        b = 0.2 + 0.6 * rng.random((6, 8))
        valid = rng.random((6, 8)) > 0.25
        g = rng.normal(0, 1, (6, 8)) * valid
        grad = ssim_map_backward(a, b, g, valid=valid)
        assert np.all(grad[~valid] == 0.0)
        h = 1e-7
        ys, xs = np.nonzero(valid)
        for i in (0, len(ys) // 2, len(ys) - 1):
            y, x = ys[i], xs[i]
            ap = a.copy()
            ap[y, x] += h
            am = a.copy()
            am[y, x] -= h
            fd = (
                (ssim_map(ap, b, valid=valid) * g).sum()
                - (ssim_map(am, b, valid=valid) * g).sum()
            ) / (2 * h)
            assert grad[y, x] == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestTexture:
    def test_local_std_flat_is_zero(self):
        assert np.allclose(local_std(np.full((6, 6), 0.3)), 0.0)

    def test_textured_mask_thresholds(self):
        img = np.zeros((8, 8))
        img[:, 4:] = 1.0
        mask = textured_mask(img, min_std=0.01)
        # Only windows straddling the step see any variance.
        assert mask[:, 3:5].all()
        assert not mask[:, :3].any()
        assert not mask[:, 5:].any()
