"""Prediction-vs-ground-truth metrics for masks and keypoints.

Instance masks score with IoU-thresholded precision/recall/F1 under
class-aware greedy matching; keypoints with radius-limited optimal
bipartite matching. (Training-time head accuracies are not reproducible
from annotations alone, so instance P/R/F1 is the standard here.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Point, iou

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_KEYPOINT_RADIUS = 10.0


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    actual: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "matched": self.matched, "predicted": self.predicted, "actual": self.actual}


def _prf(tp: int, npred: int, ngt: int) -> PRF:
    if npred == 0 and ngt == 0:
        return PRF(1.0, 1.0, 1.0, 0, 0, 0)
    p = tp / npred if npred else 0.0
    r = tp / ngt if ngt else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f1, tp, npred, ngt)


@dataclass
class MaskMetrics:
    per_class: dict[str, PRF]
    overall: PRF

    def to_dict(self) -> dict:
        return {"overall": self.overall.to_dict(),
                "per_class": {k: v.to_dict() for k, v in sorted(self.per_class.items())}}


def mask_metrics(pred, gt, iou_threshold: float = DEFAULT_IOU_THRESHOLD,
                 frame: tuple[int, int] | None = None) -> MaskMetrics:
    """Class-aware greedy IoU matching of polygon annotations.

    Candidate pairs sort by descending IoU and match one-to-one; a pair
    only counts when IoU >= threshold. ``frame`` is the rasterization
    frame (width, height); by default the joint bounding box.
    """
    if not 0 < iou_threshold < 1:
        raise ValueError("iou_threshold must be in (0, 1)")
    pred = list(pred)
    gt = list(gt)
    if frame is None:
        xs, ys = [1.0], [1.0]
        for ann in pred + gt:
            bb = ann.outline.bounds()
            xs.append(bb.xmax)
            ys.append(bb.ymax)
        frame = (int(math.ceil(max(xs))), int(math.ceil(max(ys))))
    width, height = frame
    pairs = []
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            if p.label != g.label:
                continue
            score = iou(p.outline, g.outline, width, height)
            if score >= iou_threshold:
                pairs.append((score, i, j))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_p, used_g = set(), set()
    tp_by_class: dict[str, int] = {}
    for score, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        tp_by_class[pred[i].label] = tp_by_class.get(pred[i].label, 0) + 1
    classes = {a.label for a in pred} | {a.label for a in gt}
    per_class = {}
    for cls in sorted(classes):
        per_class[cls] = _prf(tp_by_class.get(cls, 0),
                              sum(1 for a in pred if a.label == cls),
                              sum(1 for a in gt if a.label == cls))
    overall = _prf(sum(tp_by_class.values()), len(pred), len(gt))
    return MaskMetrics(per_class, overall)


def keypoint_metrics(pred, gt, radius: float = DEFAULT_KEYPOINT_RADIUS) -> PRF:
    """Optimal one-to-one matching of point sets within a radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    pred = [(float(x), float(y)) for x, y in pred]
    gt = [(float(x), float(y)) for x, y in gt]
    if not pred or not gt:
        return _prf(0, len(pred), len(gt))
    cost = np.full((len(pred), len(gt)), 4.0 * radius + 1.0)
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            d = math.hypot(p[0] - g[0], p[1] - g[1])
            if d <= radius:
                cost[i, j] = d
    rows, cols = linear_sum_assignment(cost)
    tp = int(sum(cost[i, j] <= radius for i, j in zip(rows, cols)))
    return _prf(tp, len(pred), len(gt))


def render_prf_table(title: str, rows: dict[str, PRF]) -> str:
    """Fixed-width human-readable table."""
    name_w = max([len(k) for k in rows] + [len(title), 7])
    out = [f"{title:<{name_w}}  {'prec':>6}  {'recall':>6}  {'f1':>6}  {'n_pred':>6}  {'n_gt':>6}"]
    for name, m in rows.items():
        out.append(f"{name:<{name_w}}  {m.precision:6.3f}  {m.recall:6.3f}  "
                   f"{m.f1:6.3f}  {m.predicted:6d}  {m.actual:6d}")
    return "\n".join(out)
