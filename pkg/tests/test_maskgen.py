import numpy as np
import pytest

from sweeprec import pipeline
from sweeprec.maskgen import (
    InstanceChain,
    InstanceMask,
    MaskGenError,
    classify_moving_pixels,
    compose_aux_mask,
    inconsistency_metrics,
    instance_moving_decision,
    mask_iou,
    match_instances,
    moving_fraction,
)


def inst(frame, ident, pixels, label="box"):
    return InstanceMask(
        frame_index=frame, instance_id=ident, class_label=label,
        pixels=np.asarray(pixels, bool),
    )


def rect_mask(h, w, y0, y1, x0, x1):
    m = np.zeros((h, w), bool)
    m[y0:y1, x0:x1] = True
    return m


class TestMetrics:
    def test_consistent_depths_on_static_scene(self, static_bundle, default_config):
        b = static_bundle
        k = b.keyframe_index
        gt = b.inv_depths[k]
        temporal = [b.frames[1], b.frames[3]]
        m1, m2, m3 = inconsistency_metrics(
            b.keyframe, temporal, b.stereo_of_keyframe, gt, gt
        )
        assert np.allclose(m3, 1.0, atol=1e-12)
        assert np.median(m1) < 0.02
        assert np.median(m2) < 0.02

    def test_depth_ratio_definition(self, static_bundle):
        b = static_bundle
        k = b.keyframe_index
        gt = b.inv_depths[k]
        _, _, m3 = inconsistency_metrics(
            b.keyframe, [b.frames[1]], b.stereo_of_keyframe, 2.0 * gt, gt
        )
        assert np.allclose(m3, 2.0, atol=1e-12)

    def test_requires_stereo_frame(self, static_bundle):
        b = static_bundle
        gt = b.inv_depths[b.keyframe_index]
        with pytest.raises(MaskGenError):
            inconsistency_metrics(b.keyframe, [b.frames[1]], None, gt, gt)

    def test_moving_box_scores_higher(self, standard_bundle, default_config):
        b = standard_bundle
        k = b.keyframe_index
        dt, ds = pipeline.keyframe_depths(b, default_config, k)
        temporal = [b.frames[1], b.frames[3]]
        m1, m2, m3 = inconsistency_metrics(
            b.keyframe, temporal, b.stereo_of_keyframe, dt.values, ds.values
        )
        box = b.moving[k]
        assert np.median(m3[box]) > np.median(m3[~box])
        assert np.median(m1[box]) > np.median(m1[~box])
        assert np.median(m2[box]) > np.median(m2[~box])


class TestClassification:
    def test_two_of_three_rule(self):
        m1 = np.array([[1.0, 0.0]])
        m2 = np.array([[1.0, 0.0]])
        m3 = np.array([[1.0, 9.9]])
        out = classify_moving_pixels((m1, m2, m3), thresholds=(0.5, 0.5, 1.5))
        assert out[0, 0]  # (T, T, F) -> moving
        assert not out[0, 1]  # (F, F, T) -> static

    def test_strict_threshold_boundary(self):
        m = np.array([[1.5]])
        out = classify_moving_pixels(
            (np.array([[9.0]]), np.array([[0.0]]), m), thresholds=(0.5, 0.5, 1.5)
        )
        assert not out[0, 0]  # exactly at threshold: condition false

    def test_monotone_in_thresholds(self):
        rng = np.random.default_rng(0)
        metrics = tuple(rng.random((16, 16)) * 2 for _ in range(3))
        base = classify_moving_pixels(metrics, thresholds=(0.4, 0.4, 1.1))
        for bumped in ((0.6, 0.4, 1.1), (0.4, 0.7, 1.1), (0.4, 0.4, 1.6)):
            stricter = classify_moving_pixels(metrics, thresholds=bumped)
            assert not np.any(stricter & ~base)

    def test_rejects_bad_thresholds(self):
        z = np.zeros((2, 2))
        with pytest.raises(MaskGenError):
            classify_moving_pixels((z, z, z), thresholds=(0.0, 0.5, 1.5))


class TestMatching:
    def test_identical_masks_match(self):
        m = rect_mask(10, 10, 2, 6, 3, 7)
        chains = match_instances(
            [inst(0, 1, m)], [inst(1, 1, m)], [inst(2, 1, m)]
        )
        assert len(chains) == 1
        assert chains[0].previous is not None and chains[0].following is not None

    def test_disjoint_masks_do_not_match(self):
        a = rect_mask(10, 10, 0, 3, 0, 3)
        b = rect_mask(10, 10, 6, 9, 6, 9)
        chains = match_instances([inst(0, 1, a)], [inst(1, 1, b)], [])
        assert chains[0].previous is None

    def test_half_overlap_boxes_match(self):
        # Equal-area boxes offset by half their width: IoU = 1/3 >= 0.25.
        a = rect_mask(10, 20, 2, 8, 0, 8)
        b = rect_mask(10, 20, 2, 8, 4, 12)
        assert mask_iou(a, b) == pytest.approx(1 / 3)
        chains = match_instances([inst(0, 1, a)], [inst(1, 1, b)], [])
        assert chains[0].previous is not None

    def test_class_must_match(self):
        m = rect_mask(10, 10, 2, 6, 3, 7)
        chains = match_instances(
            [inst(0, 1, m, label="cart")], [inst(1, 2, m, label="box")], []
        )
        assert chains[0].previous is None

    def test_greedy_prefers_higher_iou(self):
        big = rect_mask(12, 12, 0, 8, 0, 8)
        small = rect_mask(12, 12, 0, 4, 0, 4)
        prev_best = rect_mask(12, 12, 0, 8, 1, 9)
        chains = match_instances(
            [inst(0, 5, prev_best)],
            [inst(1, 1, big), inst(1, 2, small)],
            [],
        )
        assert chains[0].previous is not None  # big grabs the only candidate
        assert chains[1].previous is None

    def test_one_to_one_matching(self):
        m = rect_mask(10, 10, 2, 6, 3, 7)
        chains = match_instances(
            [inst(0, 9, m)],
            [inst(1, 1, m), inst(1, 2, m)],
            [],
        )
        matched = [c.previous is not None for c in chains]
        assert sum(matched) == 1


class TestDecision:
    def _chain(self, fractions):
        # Build masks/mov maps so each member has the given moving share.
        members = []
        moving = {}
        for i, frac in enumerate(fractions):
            mask = rect_mask(10, 10, 0, 10, 0, 10)
            mov = np.zeros((10, 10), bool)
            mov[: int(round(frac * 10))] = True
            members.append(inst(i, 1, mask))
            moving[i] = mov
        chain = InstanceChain(
            current=members[len(members) // 2],
            previous=members[0] if len(members) > 1 else None,
            following=members[-1] if len(members) > 2 else None,
        )
        return chain, moving

    def test_mean_above_threshold_moving(self):
        chain, moving = self._chain([0.5, 0.5, 0.5])
        assert instance_moving_decision(chain, moving, 0.4)

    def test_mean_below_threshold_static(self):
        chain, moving = self._chain([0.3, 0.3, 0.3])
        assert not instance_moving_decision(chain, moving, 0.4)

    def test_single_frame_chain(self):
        mask = rect_mask(10, 10, 0, 10, 0, 10)
        mov = np.zeros((10, 10), bool)
        mov[: 5] = True  # 0.5 > 0.4
        chain = InstanceChain(current=inst(0, 1, mask))
        assert instance_moving_decision(chain, {0: mov}, 0.4)

    def test_empty_mask_excluded(self):
        empty = inst(0, 1, np.zeros((10, 10), bool))
        assert moving_fraction(empty, np.ones((10, 10), bool)) is None
        chain = InstanceChain(current=empty)
        assert not instance_moving_decision(chain, {0: np.ones((10, 10), bool)}, 0.4)

    def test_compose_union(self):
        a = inst(1, 1, rect_mask(10, 10, 0, 4, 0, 4))
        b = inst(1, 2, rect_mask(10, 10, 6, 9, 6, 9))
        moving = {1: np.ones((10, 10), bool)}
        chains = [InstanceChain(current=a), InstanceChain(current=b)]
        out = compose_aux_mask(chains, moving, (10, 10), 0.4)
        assert np.array_equal(out, a.pixels | b.pixels)


class TestAuxiliaryMaskPipeline:
    def test_standard_scene_recall_and_precision(self, standard_bundle, default_config):
        from sweeprec.evalmetrics import mask_pr

        b = standard_bundle
        aux = pipeline.auxiliary_mask(b, default_config)
        precision, recall, _ = mask_pr(aux, b.moving[b.keyframe_index])
        assert recall >= 0.9
        assert precision >= 0.7

    def test_static_instances_spared(self, two_box_bundle, default_config):
        from sweeprec.evalmetrics import mask_pr

        b = two_box_bundle
        k = b.keyframe_index
        aux = pipeline.auxiliary_mask(b, default_config)
        parked = b.labels[k] == 2
        assert parked.any()
        assert not (aux & parked).any()  # the parked box is not flagged
        precision, recall, _ = mask_pr(aux, b.moving[k])
        assert recall >= 0.9 and precision >= 0.7

    def test_mask_within_instances(self, standard_bundle, default_config):
        b = standard_bundle
        k = b.keyframe_index
        aux = pipeline.auxiliary_mask(b, default_config)
        instance_pixels = np.zeros(b.keyframe.shape, bool)
        for m in b.instance_masks(k):
            instance_pixels |= m.pixels
        assert not (aux & ~instance_pixels).any()

    def test_static_scene_yields_empty_mask(self, static_bundle, default_config):
        aux = pipeline.auxiliary_mask(static_bundle, default_config)
        assert not aux.any()
