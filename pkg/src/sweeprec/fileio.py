"""On-disk formats: PFM, ASCII PLY, PNG variants, pose/intrinsics text,
and the CSV outputs.

All floating-point text output uses 9 significant digits so reruns diff
cleanly across platforms.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import CameraIntrinsics, PoseSE3

FLOAT_FMT = "%.9g"


class FileFormatError(ValueError):
    """A file does not match its expected format."""


def format_float(x: float) -> str:
    return FLOAT_FMT % float(x)


# ---------------------------------------------------------------------------
# PFM (single-channel float, little-endian, scale -1.0)


def write_pfm(path, data: np.ndarray) -> None:
    """Write a single-channel float32 PFM (rows stored bottom-to-top)."""
    arr = np.asarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise FileFormatError(f"PFM writer expects a 2-D array, got ndim={arr.ndim}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(arr[::-1].tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"Pf":
            raise FileFormatError(f"{path}: not a single-channel PFM (header {magic!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise FileFormatError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        payload = f.read(4 * w * h)
        if len(payload) != 4 * w * h:
            raise FileFormatError(f"{path}: truncated PFM payload")
    arr = np.frombuffer(payload, dtype=dtype).reshape(h, w)
    return np.asarray(arr[::-1], dtype=float)


# ---------------------------------------------------------------------------
# PLY (ASCII point cloud with per-vertex color)


def write_ply(path, points: np.ndarray, colors: np.ndarray) -> None:
    pts = np.asarray(points, dtype=float)
    cols = np.asarray(colors)
    if pts.ndim != 2 or pts.shape[1] != 3 or cols.shape != pts.shape:
        raise FileFormatError("PLY writer expects (N, 3) points and matching colors")
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    for p, c in zip(pts, cols):
        lines.append(
            f"{format_float(p[0])} {format_float(p[1])} {format_float(p[2])} "
            f"{int(c[0])} {int(c[1])} {int(c[2])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_ply(path):
    text = Path(path).read_text().splitlines()
    try:
        n = next(int(l.split()[2]) for l in text if l.startswith("element vertex"))
        start = text.index("end_header") + 1
    except (StopIteration, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed PLY header") from exc
    pts, cols = [], []
    for line in text[start : start + n]:
        f = line.split()
        pts.append([float(f[0]), float(f[1]), float(f[2])])
        cols.append([int(f[3]), int(f[4]), int(f[5])])
    return np.array(pts).reshape(-1, 3), np.array(cols, dtype=np.uint8).reshape(-1, 3)


# ---------------------------------------------------------------------------
# PNG variants


def write_image_png(path, image: np.ndarray) -> None:
    """Store an intensity image in [0, 1] as 16-bit grayscale PNG."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise FileFormatError("image PNGs are single-channel")
    arr = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(path)


def read_image_png(path) -> np.ndarray:
    arr = np.array(Image.open(path))
    if arr.dtype == np.uint8:
        return arr.astype(float) / 255.0
    return arr.astype(float) / 65535.0


def write_mask_png(path, mask: np.ndarray) -> None:
    """Store a boolean mask as a 1-bit PNG."""
    m = np.asarray(mask, dtype=bool)
    Image.fromarray((m * 255).astype(np.uint8)).convert("1").save(path)


def read_mask_png(path) -> np.ndarray:
    return np.array(Image.open(path).convert("L")) > 127


_PALETTE = None


def _instance_palette() -> list[int]:
    # Deterministic palette: id 0 black, others spread over hue-ish ramps.
    global _PALETTE
    if _PALETTE is None:
        pal = [0, 0, 0]
        for i in range(1, 256):
            pal += [(37 * i) % 256, (97 * i) % 256, (173 * i) % 256]
        _PALETTE = pal
    return _PALETTE


def write_instance_png(path, labels: np.ndarray) -> None:
    """Store an instance-id map as an indexed (palette) PNG."""
    lab = np.asarray(labels)
    if lab.min() < 0 or lab.max() > 255:
        raise FileFormatError("instance ids must fit in one byte")
    img = Image.fromarray(lab.astype(np.uint8)).convert("P")
    img.putpalette(_instance_palette())
    img.save(path)


def read_instance_png(path) -> np.ndarray:
    return np.array(Image.open(path)).astype(int)


# ---------------------------------------------------------------------------
# Poses and intrinsics text


def write_poses(path, poses: list[PoseSE3]) -> None:
    """One pose per line: 12 numbers, row-major 3x4 [R|t] (world-to-camera)."""
    lines = [
        " ".join(format_float(x) for x in pose.matrix34().reshape(-1))
        for pose in poses
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_poses(path) -> list[PoseSE3]:
    poses = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        vals = [float(x) for x in line.split()]
        if len(vals) != 12:
            raise FileFormatError(f"{path}:{ln}: expected 12 numbers, got {len(vals)}")
        poses.append(PoseSE3.from_matrix34(np.array(vals).reshape(3, 4)))
    return poses


def write_intrinsics(path, intr: CameraIntrinsics) -> None:
    """Two lines: 'fx fy cx cy' then 'width height'."""
    Path(path).write_text(
        " ".join(format_float(x) for x in (intr.fx, intr.fy, intr.cx, intr.cy))
        + f"\n{intr.width} {intr.height}\n"
    )


def read_intrinsics(path) -> CameraIntrinsics:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2:
        raise FileFormatError(f"{path}: expected two lines (focal/principal, size)")
    fx, fy, cx, cy = (float(x) for x in lines[0].split())
    w, h = (int(x) for x in lines[1].split())
    return CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=w, height=h)


# ---------------------------------------------------------------------------
# CSV outputs


def write_sparse_csv(path, pixels: np.ndarray, inv_depths: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["u", "v", "inv_depth"])
        for (u, v), d in zip(np.asarray(pixels), np.asarray(inv_depths)):
            wr.writerow([int(u), int(v), format_float(d)])


def read_sparse_csv(path):
    pixels, depths = [], []
    with open(path, newline="") as f:
        rd = csv.reader(f)
        header = next(rd, None)
        if header != ["u", "v", "inv_depth"]:
            raise FileFormatError(f"{path}: unexpected sparse CSV header {header}")
        for row in rd:
            pixels.append([int(row[0]), int(row[1])])
            depths.append(float(row[2]))
    return (
        np.array(pixels, dtype=int).reshape(-1, 2),
        np.array(depths, dtype=float).reshape(-1),
    )


def write_loss_csv(path, rows: list[tuple[str, int, float]], total: float) -> None:
    """Rows of (term, scale, value) followed by a total row."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["term", "scale", "value"])
        for term, scale, value in rows:
            wr.writerow([term, scale, format_float(value)])
        wr.writerow(["total", "", format_float(total)])


def write_metrics_csv(path, label: str, metrics: dict[str, float]) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["label", "metric", "value"])
        for name, value in metrics.items():
            wr.writerow([label, name, format_float(value)])


# ---------------------------------------------------------------------------
# Cost volume directory (per-step PFM layers plus a text header)


def write_volume(path, volume) -> None:
    from .costvolume import CostVolume  # local import to avoid cycles

    assert isinstance(volume, CostVolume)
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    h, w, m = volume.scores.shape
    header = (
        f"d_min {format_float(volume.drange.d_min)}\n"
        f"d_max {format_float(volume.drange.d_max)}\n"
        f"steps {m}\nheight {h}\nwidth {w}\nkind {volume.kind}\n"
    )
    (root / "header.txt").write_text(header)
    for i in range(m):
        write_pfm(root / f"score_{i:03d}.pfm", volume.scores[:, :, i])
        write_pfm(root / f"count_{i:03d}.pfm", volume.valid_counts[:, :, i])


def read_volume(path):
    from .costvolume import CostVolume, DepthRange

    root = Path(path)
    fields = {}
    for line in (root / "header.txt").read_text().splitlines():
        key, _, value = line.partition(" ")
        fields[key] = value
    drange = DepthRange(
        d_min=float(fields["d_min"]),
        d_max=float(fields["d_max"]),
        num_steps=int(fields["steps"]),
    )
    m = drange.num_steps
    scores = np.stack([read_pfm(root / f"score_{i:03d}.pfm") for i in range(m)], axis=2)
    counts = np.stack([read_pfm(root / f"count_{i:03d}.pfm") for i in range(m)], axis=2)
    return CostVolume(
        scores=scores,
        valid_counts=np.round(counts).astype(np.int32),
        drange=drange,
        kind=fields.get("kind", "aggregated"),
    )
