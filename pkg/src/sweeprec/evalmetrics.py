"""Depth-error metrics and mask precision/recall."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DEPTH_CAP = 80.0


class MetricsError(ValueError):
    """Nothing valid to evaluate."""


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float

    def as_dict(self) -> dict[str, float]:
        return {
            "abs_rel": self.abs_rel,
            "sq_rel": self.sq_rel,
            "rmse": self.rmse,
            "rmse_log": self.rmse_log,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta3": self.delta3,
        }


def depth_metrics(
    pred_inv_depth: np.ndarray,
    gt_depth: np.ndarray,
    cap: float = DEFAULT_DEPTH_CAP,
    valid: np.ndarray | None = None,
) -> DepthMetrics:
    """Standard depth errors between a predicted inverse-depth map and
    ground-truth depth in meters.

    Only pixels with valid ground truth no deeper than `cap` (and inside
    the optional extra mask) are evaluated.
    """
    pred_inv = np.asarray(pred_inv_depth, dtype=float)
    gt = np.asarray(gt_depth, dtype=float)
    if pred_inv.shape != gt.shape:
        raise MetricsError(f"shape mismatch: {pred_inv.shape} vs {gt.shape}")
    mask = np.isfinite(gt) & (gt > 0) & (gt <= cap) & (pred_inv > 0)
    if valid is not None:
        mask &= valid
    if not mask.any():
        raise MetricsError("no valid ground-truth pixels to evaluate")
    p = 1.0 / pred_inv[mask]
    g = gt[mask]
    err = p - g
    ratio = np.maximum(p / g, g / p)
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(err) / g)),
        sq_rel=float(np.mean(err * err / g)),
        rmse=float(np.sqrt(np.mean(err * err))),
        rmse_log=float(np.sqrt(np.mean((np.log(p) - np.log(g)) ** 2))),
        delta1=float(np.mean(ratio < 1.25)),
        delta2=float(np.mean(ratio < 1.25**2)),
        delta3=float(np.mean(ratio < 1.25**3)),
    )


def mask_pr(
    pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5
) -> tuple[float, float, float]:
    """Precision, recall, and F1 of a (probability or binary) mask.

    Edge cases follow the usual conventions: precision is 1 when nothing
    is predicted and recall is 1 when there are no reference positives.
    """
    p = np.asarray(pred)
    g = np.asarray(gt).astype(bool)
    if p.shape != g.shape:
        raise MetricsError(f"shape mismatch: {p.shape} vs {g.shape}")
    pb = p if p.dtype == bool else p > threshold
    tp = float(np.logical_and(pb, g).sum())
    fp = float(np.logical_and(pb, ~g).sum())
    fn = float(np.logical_and(~pb, g).sum())
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1
