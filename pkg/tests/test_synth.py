import numpy as np
import pytest

from sweeprec import synth
from sweeprec.geometry import warp_to_keyframe


class TestDeterminism:
    def test_same_seed_bitwise_identical(self):
        a = synth.render(synth.standard_scene(seed=7))
        b = synth.render(synth.standard_scene(seed=7))
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.image, fb.image)
        for da, db in zip(a.inv_depths, b.inv_depths):
            assert np.array_equal(da, db)
        assert np.array_equal(a.sparse.pixels, b.sparse.pixels)
        assert np.array_equal(a.sparse.inv_depths, b.sparse.inv_depths)

    def test_different_seed_differs(self):
        a = synth.render(synth.standard_scene(seed=0))
        b = synth.render(synth.standard_scene(seed=1))
        assert not np.array_equal(a.keyframe.image, b.keyframe.image)


class TestGroundTruthConsistency:
    def test_full_depth_coverage(self, standard_bundle):
        for d in standard_bundle.inv_depths + standard_bundle.stereo_inv_depths:
            assert (d > 0).all()

    def test_reprojection_residual_static(self, standard_bundle):
        for i in (1, 3):
            assert synth.static_reprojection_residual(standard_bundle, i) < 1e-3
        assert (
            synth.static_reprojection_residual(
                standard_bundle, standard_bundle.keyframe_index, stereo=True
            )
            < 1e-3
        )

    def test_mover_residual_dominates(self, standard_bundle):
        # Warping with the static assumption fails on the box by a wide
        # margin relative to the static-pixel median.
        b = standard_bundle
        k = b.keyframe_index
        inv = np.where(b.inv_depths[k] > 0, b.inv_depths[k], 1.0)
        warped, valid = warp_to_keyframe(b.frames[3], b.keyframe, inv)
        diff = np.abs(warped - b.keyframe.image)
        static = synth.occlusion_free_static_mask(b, 3) & valid
        mover = b.moving[k] & valid
        assert np.median(diff[mover]) >= 5 * np.median(diff[static])

    def test_wrong_depth_increases_error(self, static_bundle):
        b = static_bundle
        k = b.keyframe_index
        src = b.frames[1]
        good, gv = warp_to_keyframe(src, b.keyframe, b.inv_depths[k])
        bad, bv = warp_to_keyframe(src, b.keyframe, np.full(b.keyframe.shape, 0.6))
        both = gv & bv
        key = b.keyframe.image
        assert np.abs(bad - key)[both].mean() > np.abs(good - key)[both].mean()

    def test_instances_partition_and_movers_subset(self, standard_bundle):
        b = standard_bundle
        for i in range(b.num_frames):
            masks = b.instance_masks(i)
            union = np.zeros(b.frames[i].shape, bool)
            for m in masks:
                assert not (union & m.pixels).any()  # disjoint
                union |= m.pixels
            assert not (b.moving[i] & ~union).any()  # movers within instances

    def test_stereo_pose_is_pure_baseline(self, standard_bundle):
        spec = standard_bundle.spec
        for i, (frame, stereo) in enumerate(
            zip(standard_bundle.frames, standard_bundle.stereo_frames)
        ):
            rel = stereo.pose.compose(frame.pose.inverse())
            assert np.allclose(rel.rotation, np.eye(3), atol=1e-12)
            assert np.allclose(
                rel.translation, [-spec.stereo_baseline, 0.0, 0.0], atol=1e-12
            )

    def test_keyframe_role_assignment(self, standard_bundle):
        k = standard_bundle.keyframe_index
        assert standard_bundle.frames[k].role == "keyframe"
        assert all(
            f.role == "temporal"
            for i, f in enumerate(standard_bundle.frames)
            if i != k
        )
        assert all(f.role == "static_stereo" for f in standard_bundle.stereo_frames)


class TestSparseSamples:
    def test_zero_noise_matches_gt(self, standard_bundle):
        b = standard_bundle
        k = b.keyframe_index
        u, v = b.sparse.pixels[:, 0], b.sparse.pixels[:, 1]
        assert np.array_equal(b.sparse.inv_depths, b.inv_depths[k][v, u])

    def test_never_on_movers(self, standard_bundle):
        b = standard_bundle
        k = b.keyframe_index
        u, v = b.sparse.pixels[:, 0], b.sparse.pixels[:, 1]
        assert not b.moving[k][v, u].any()

    def test_count_zero_empty(self, standard_bundle):
        rng = np.random.default_rng(0)
        out = synth.sparse_samples(
            standard_bundle.inv_depths[0], 0, 0.0, rng
        )
        assert len(out) == 0

    def test_noise_clamped_positive(self, standard_bundle):
        rng = np.random.default_rng(1)
        out = synth.sparse_samples(
            standard_bundle.inv_depths[0], 500, 5.0, rng
        )
        assert np.all(out.inv_depths > 0)

    def test_too_many_samples_rejected(self, standard_bundle):
        rng = np.random.default_rng(2)
        with pytest.raises(synth.SceneError):
            synth.sparse_samples(standard_bundle.inv_depths[0], 10**7, 0.0, rng)


class TestSceneSpecValidation:
    def test_too_few_frames(self):
        spec = synth.standard_scene()
        import dataclasses

        with pytest.raises(synth.SceneError):
            dataclasses.replace(spec, camera_path=spec.camera_path[:2])

    def test_keyframe_must_be_interior(self):
        spec = synth.standard_scene()
        import dataclasses

        with pytest.raises(synth.SceneError):
            dataclasses.replace(spec, keyframe_index=0)

    def test_empty_layout(self):
        spec = synth.standard_scene()
        import dataclasses

        with pytest.raises(synth.SceneError):
            dataclasses.replace(spec, objects=())

    def test_mover_requires_instance_id(self):
        spec = synth.standard_scene()
        import dataclasses

        bad = [
            dataclasses.replace(o, instance_id=None, class_label=None)
            if o.is_mover
            else o
            for o in spec.objects
        ]
        with pytest.raises(synth.SceneError):
            dataclasses.replace(spec, objects=tuple(bad))


class TestBundleIO:
    def test_round_trip(self, standard_bundle, tmp_path):
        synth.write_bundle(standard_bundle, tmp_path / "bundle")
        again = synth.read_bundle(tmp_path / "bundle")
        assert again.keyframe_index == standard_bundle.keyframe_index
        assert again.num_frames == standard_bundle.num_frames
        # Images round-trip through 16-bit PNG quantization.
        for fa, fb in zip(standard_bundle.frames, again.frames):
            assert np.max(np.abs(fa.image - fb.image)) <= 0.5 / 65535 + 1e-9
            assert np.allclose(fa.pose.matrix34(), fb.pose.matrix34(), atol=1e-7)
        for da, db in zip(standard_bundle.inv_depths, again.inv_depths):
            assert np.max(np.abs(da - db)) < 1e-6  # float32 PFM
        for la, lb in zip(standard_bundle.labels, again.labels):
            assert np.array_equal(la, lb)
        for ma, mb in zip(standard_bundle.moving, again.moving):
            assert np.array_equal(ma, mb)
        assert np.array_equal(standard_bundle.sparse.pixels, again.sparse.pixels)
        assert again.class_table == standard_bundle.class_table

    def test_written_twice_is_byte_identical(self, standard_bundle, tmp_path):
        import hashlib

        def digest(root):
            out = {}
            for p in sorted(root.rglob("*")):
                if p.is_file():
                    out[p.relative_to(root)] = hashlib.sha256(p.read_bytes()).hexdigest()
            return out

        synth.write_bundle(standard_bundle, tmp_path / "a")
        synth.write_bundle(standard_bundle, tmp_path / "b")
        assert digest(tmp_path / "a") == digest(tmp_path / "b")
