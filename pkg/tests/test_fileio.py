import numpy as np
import pytest

from sweeprec import fileio
from sweeprec.geometry import CameraIntrinsics, PoseSE3


class TestPFM:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.normal(0, 10, (12, 17)).astype(np.float32)
        path = tmp_path / "x.pfm"
        fileio.write_pfm(path, data)
        again = fileio.read_pfm(path)
        assert np.array_equal(again, data.astype(float))

    def test_header_is_little_endian_scale(self, tmp_path):
        path = tmp_path / "x.pfm"
        fileio.write_pfm(path, np.zeros((2, 3)))
        with open(path, "rb") as f:
            assert f.readline() == b"Pf\n"
            assert f.readline() == b"3 2\n"  # width height
            assert float(f.readline()) == -1.0

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(fileio.FileFormatError):
            fileio.write_pfm(tmp_path / "x.pfm", np.zeros((2, 2, 2)))

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"PF\n1 1\n-1.0\n\x00\x00\x00\x00")
        with pytest.raises(fileio.FileFormatError):
            fileio.read_pfm(path)


class TestPLY:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        pts = rng.normal(0, 2, (25, 3))
        cols = rng.integers(0, 256, (25, 3)).astype(np.uint8)
        path = tmp_path / "cloud.ply"
        fileio.write_ply(path, pts, cols)
        p2, c2 = fileio.read_ply(path)
        assert np.max(np.abs(p2 - pts)) < 1e-8  # 9 significant digits
        assert np.array_equal(c2, cols)

    def test_empty_cloud(self, tmp_path):
        path = tmp_path / "empty.ply"
        fileio.write_ply(path, np.zeros((0, 3)), np.zeros((0, 3), np.uint8))
        p, c = fileio.read_ply(path)
        assert len(p) == 0 and len(c) == 0


class TestPNG:
    def test_image_16bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        img = rng.random((10, 14))
        path = tmp_path / "img.png"
        fileio.write_image_png(path, img)
        again = fileio.read_image_png(path)
        assert np.max(np.abs(again - img)) <= 0.5 / 65535 + 1e-12

    def test_mask_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        mask = rng.random((9, 11)) > 0.5
        path = tmp_path / "m.png"
        fileio.write_mask_png(path, mask)
        assert np.array_equal(fileio.read_mask_png(path), mask)

    def test_instance_round_trip(self, tmp_path):
        labels = np.zeros((8, 8), int)
        labels[2:5, 1:4] = 1
        labels[6:, 5:] = 7
        path = tmp_path / "inst.png"
        fileio.write_instance_png(path, labels)
        assert np.array_equal(fileio.read_instance_png(path), labels)

    def test_instance_id_range_checked(self, tmp_path):
        with pytest.raises(fileio.FileFormatError):
            fileio.write_instance_png(tmp_path / "x.png", np.full((2, 2), 300))


class TestPosesIntrinsics:
    def test_pose_round_trip(self, tmp_path):
        from scipy.spatial.transform import Rotation

        rng = np.random.default_rng(4)
        poses = [
            PoseSE3(
                Rotation.random(random_state=int(rng.integers(0, 2**31))).as_matrix(),
                rng.normal(0, 3, 3),
            )
            for _ in range(4)
        ]
        path = tmp_path / "poses.txt"
        fileio.write_poses(path, poses)
        again = fileio.read_poses(path)
        assert len(again) == 4
        for a, b in zip(poses, again):
            assert np.max(np.abs(a.matrix34() - b.matrix34())) < 1e-7

    def test_pose_line_is_twelve_numbers(self, tmp_path):
        path = tmp_path / "poses.txt"
        fileio.write_poses(path, [PoseSE3.identity()])
        line = path.read_text().strip()
        assert len(line.split()) == 12

    def test_pose_rejects_short_line(self, tmp_path):
        path = tmp_path / "poses.txt"
        path.write_text("1 0 0 0 1 0\n")
        with pytest.raises(fileio.FileFormatError):
            fileio.read_poses(path)

    def test_intrinsics_round_trip(self, tmp_path):
        intr = CameraIntrinsics(fx=64.5, fy=63.25, cx=31.75, cy=15.5, width=64, height=32)
        path = tmp_path / "intr.txt"
        fileio.write_intrinsics(path, intr)
        again = fileio.read_intrinsics(path)
        assert again == intr


class TestCSV:
    def test_sparse_round_trip(self, tmp_path):
        pixels = np.array([[3, 4], [10, 2]])
        depths = np.array([0.25, 0.5])
        path = tmp_path / "sparse.csv"
        fileio.write_sparse_csv(path, pixels, depths)
        p2, d2 = fileio.read_sparse_csv(path)
        assert np.array_equal(p2, pixels)
        assert np.allclose(d2, depths, atol=1e-9)

    def test_loss_csv_layout(self, tmp_path):
        path = tmp_path / "loss.csv"
        fileio.write_loss_csv(path, [("reprojection", 0, 0.125), ("smooth", 1, 1e-3)], 0.5)
        lines = path.read_text().splitlines()
        assert lines[0] == "term,scale,value"
        assert lines[1] == "reprojection,0,0.125"
        assert lines[-1] == "total,,0.5"

    def test_metrics_csv_layout(self, tmp_path):
        path = tmp_path / "m.csv"
        fileio.write_metrics_csv(path, "scene0", {"abs_rel": 0.0123456789})
        lines = path.read_text().splitlines()
        assert lines[0] == "label,metric,value"
        assert lines[1] == "scene0,abs_rel,0.0123456789"


class TestVolumeIO:
    def test_round_trip(self, tmp_path, static_bundle):
        from sweeprec.costvolume import DepthRange, build_cost_volume

        drange = DepthRange(0.05, 1.2, 6)
        vol = build_cost_volume(
            static_bundle.keyframe, [static_bundle.frames[1]], drange
        )
        fileio.write_volume(tmp_path / "vol", vol)
        again = fileio.read_volume(tmp_path / "vol")
        assert again.drange == vol.drange
        assert again.kind == vol.kind
        assert np.max(np.abs(again.scores - vol.scores)) < 1e-6
        assert np.array_equal(again.valid_counts, vol.valid_counts)
