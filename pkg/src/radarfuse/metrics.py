"""Ground-truth matching, recall/precision/FN, and area-bucketed true positives."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .boxes import ClassId, area, iou
from .detector import Detection

__all__ = [
    "GroundTruthBox",
    "MetricsReport",
    "AreaBucket",
    "iou",
    "match_detections",
    "evaluate",
    "AREA_EDGES",
    "SMALL_AREA",
    "LARGE_AREA",
]

AREA_EDGES: tuple[float, ...] = tuple(float(v) for v in 10 ** np.linspace(1.5, 5.0, 9))
SMALL_AREA = 1000.0  # px^2; objects under this are the "small" regime
LARGE_AREA = AREA_EDGES[-1]  # px^2; at or above this the default primary saturates


@dataclass(frozen=True)
class GroundTruthBox:
    x0: float
    y0: float
    x1: float
    y1: float
    class_id: ClassId
    occluded: bool = False

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate ground-truth box ({self.x0}, {self.y0}, {self.x1}, {self.y1})")
        object.__setattr__(self, "class_id", ClassId(self.class_id))

    @property
    def area(self) -> float:
        return area(self)


@dataclass(frozen=True)
class AreaBucket:
    lo: float
    hi: Optional[float]  # None = unbounded
    true_positives: int
    ground_truth: int


@dataclass
class MetricsReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    recall: float
    precision: float
    iou_threshold: float
    frame_ids: list[int] = field(default_factory=list)
    per_frame_recall: list[Optional[float]] = field(default_factory=list)
    tp_by_area_bucket: list[AreaBucket] = field(default_factory=list)
    small_tp: int = 0
    small_gt: int = 0
    large_tp: int = 0
    large_gt: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthBox],
    iou_threshold: float,
) -> list[tuple[int, Optional[int]]]:
    """Greedy score-ordered one-to-one matching within each class.

    Detections are visited by descending score (stable for ties); each takes
    the unmatched, non-occluded, same-class ground truth of highest IoU at or
    above the threshold, preferring the lower index on IoU ties.

    Returns:
        ``(det_index, gt_index or None)`` pairs in detection index order.
    """
    if not (0 < iou_threshold <= 1):
        raise ValueError("iou_threshold must lie in (0, 1]")
    taken = [g.occluded for g in gts]
    assignment: list[Optional[int]] = [None] * len(dets)
    for i in sorted(range(len(dets)), key=lambda k: -dets[k].score):
        d = dets[i]
        best, best_iou = None, iou_threshold
        for j, g in enumerate(gts):
            if taken[j] or g.class_id != d.class_id:
                continue
            v = iou(d, g)
            if v >= best_iou and (best is None or v > best_iou):
                best, best_iou = j, v
        if best is not None:
            taken[best] = True
            assignment[i] = best
    return list(enumerate(assignment))


def _empty_buckets() -> list[list]:
    edges = (0.0,) + AREA_EDGES + (None,)
    return [[edges[k], edges[k + 1], 0, 0] for k in range(len(edges) - 1)]


def evaluate(results, ground_truth: Mapping[int, Sequence[GroundTruthBox]], iou_threshold: float = 0.4) -> MetricsReport:
    """Aggregates matching over a sequence.

    Args:
        results: per-frame ``FusedFrameResult`` objects (anything with
            ``frame_id`` and ``detections``), in reporting order.
        ground_truth: frame_id -> ground-truth boxes.
        iou_threshold: matching IoU.

    Raises:
        ValueError: if the frame ids of ``results`` and ``ground_truth`` differ.
    """
    ids = [r.frame_id for r in results]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate frame ids in results")
    if set(ids) != set(ground_truth):
        missing = sorted(set(ground_truth) ^ set(ids))
        raise ValueError(f"frame ids of results and ground truth differ: {missing[:10]}")

    tp = fp = fn = 0
    per_frame: list[Optional[float]] = []
    buckets = _empty_buckets()
    small = [0, 0]
    large = [0, 0]
    for r in results:
        gts = ground_truth[r.frame_id]
        pairs = match_detections(r.detections, gts, iou_threshold)
        matched = {g for _, g in pairs if g is not None}
        f_tp = len(matched)
        f_fp = len(pairs) - f_tp
        n_gt = sum(1 for g in gts if not g.occluded)
        tp, fp, fn = tp + f_tp, fp + f_fp, fn + (n_gt - f_tp)
        per_frame.append(f_tp / n_gt if n_gt else None)
        for j, g in enumerate(gts):
            if g.occluded:
                continue
            a = g.area
            hit = int(j in matched)
            for b in buckets:
                if a >= b[0] and (b[1] is None or a < b[1]):
                    b[2] += hit
                    b[3] += 1
                    break
            if a < SMALL_AREA:
                small[0] += hit
                small[1] += 1
            if a >= LARGE_AREA:
                large[0] += hit
                large[1] += 1

    return MetricsReport(
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        recall=_ratio(tp, tp + fn),
        precision=_ratio(tp, tp + fp),
        iou_threshold=iou_threshold,
        frame_ids=ids,
        per_frame_recall=per_frame,
        tp_by_area_bucket=[AreaBucket(*b) for b in buckets],
        small_tp=small[0],
        small_gt=small[1],
        large_tp=large[0],
        large_gt=large[1],
    )


def per_frame_csv(report: MetricsReport, results, gflops: Sequence[float]) -> str:
    """CSV rows ``frame_id, recall, n_rois, gflops`` (empty recall = no ground truth)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame_id", "recall", "n_rois", "gflops"])
    for fid, rec, r, g in zip(report.frame_ids, report.per_frame_recall, results, gflops):
        w.writerow([fid, "" if rec is None else repr(rec), r.n_rois, repr(float(g))])
    return buf.getvalue()
