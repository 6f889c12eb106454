"""Primary + radar-ROI secondary detection, remapped and merged by NMS."""

from __future__ import annotations

import threading
import weakref
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .boxes import area, iou
from .detector import Bounds, Detection, Detector
from .geometry import project_points
from .proposals import ProposalConfig, RoiProposal, make_proposals


@dataclass(frozen=True)
class FusionConfig:
    primary_input_size: int = 416
    secondary_input_size: int = 300
    roi_size: int = 240
    nms_iou: float = 0.45
    score_floor: float = 0.05
    max_proposals: int = 64
    dedup_iou: Optional[float] = None
    class_aware: bool = True

    def __post_init__(self):
        if min(self.primary_input_size, self.secondary_input_size, self.roi_size) <= 0:
            raise ValueError("sizes must be positive")
        if not (0 < self.nms_iou <= 1):
            raise ValueError("nms_iou must lie in (0, 1]")

    @property
    def proposal_config(self) -> ProposalConfig:
        return ProposalConfig(self.roi_size, self.max_proposals, self.dedup_iou)


@dataclass(frozen=True)
class FusedFrameResult:
    frame_id: int
    detections: tuple[Detection, ...]
    n_rois: int
    primary_count: int
    secondary_count: int
    suppressed_count: int
    rois: tuple[RoiProposal, ...] = ()


def remap_to_frame(
    det: Detection,
    region,
    input_size: int,
    image_size: Optional[tuple[int, int]] = None,
) -> Optional[Detection]:
    """Maps a box from detector-input pixels back to full-image pixels.

    ``region`` is the cropped area (an ``RoiProposal`` or anything with
    ``x0..y1``). Returns None when clipping to the image leaves no area.
    """
    s = max(region.x1 - region.x0, region.y1 - region.y0) / input_size
    x0, y0 = det.x0 * s + region.x0, det.y0 * s + region.y0
    x1, y1 = det.x1 * s + region.x0, det.y1 * s + region.y0
    if image_size is not None:
        w, h = image_size
        x0, x1 = min(max(x0, 0.0), w), min(max(x1, 0.0), w)
        y0, y1 = min(max(y0, 0.0), h), min(max(y1, 0.0), h)
    if not (x0 < x1 and y0 < y1):
        return None
    return Detection(x0, y0, x1, y1, det.class_id, det.score)


def nms_order_key(d: Detection):
    # score desc, area desc, x0 asc; the remaining fields make the order total
    return (-d.score, -area(d), d.x0, d.y0, d.x1, d.y1, d.class_id.value)


def nms(dets: Iterable[Detection], iou_threshold: float, class_aware: bool = True) -> list[Detection]:
    """Greedy NMS. Output is in kept order and independent of input order."""
    kept: list[Detection] = []
    for d in sorted(dets, key=nms_order_key):
        if all(
            (class_aware and k.class_id != d.class_id) or iou(k, d) < iou_threshold
            for k in kept
        ):
            kept.append(d)
    return kept


class _Bounds:
    __slots__ = ("x0", "y0", "x1", "y1")

    def __init__(self, b: Bounds):
        self.x0, self.y0, self.x1, self.y1 = b


_lock_guard = threading.Lock()
_exclusive_locks: "weakref.WeakKeyDictionary[object, threading.Lock]" = weakref.WeakKeyDictionary()


def _detect(detector: Detector, frame, bounds: Bounds) -> list[Detection]:
    if not getattr(detector, "exclusive", False):
        return detector.detect(frame, bounds)
    with _lock_guard:
        lock = _exclusive_locks.setdefault(detector, threading.Lock())
    with lock:
        return detector.detect(frame, bounds)


def frame_proposals(frame, cfg: FusionConfig) -> list[RoiProposal]:
    pixels = project_points(frame.radar_points, frame.radar_to_camera, frame.intrinsics)
    return make_proposals(pixels, frame.image_size, cfg.proposal_config)


def fuse_frame(
    frame,
    primary: Detector,
    secondary: Optional[Detector],
    cfg: FusionConfig = FusionConfig(),
    executor: Optional[Executor] = None,
) -> FusedFrameResult:
    """Runs the full fusion pipeline on one frame.

    With ``secondary=None`` no ROIs are generated (primary-only baseline).
    When an ``executor`` is given, the primary pass and every ROI pass are
    submitted to it; the merge is sequential and the result is identical to
    serial execution. Do not pass the executor that is running this call.
    """
    if primary.input_size != cfg.primary_input_size:
        raise ValueError(f"primary detector input {primary.input_size} != config {cfg.primary_input_size}")
    if secondary is not None and secondary.input_size != cfg.secondary_input_size:
        raise ValueError(f"secondary detector input {secondary.input_size} != config {cfg.secondary_input_size}")

    full: Bounds = (0, 0, *frame.image_size)
    rois = frame_proposals(frame, cfg) if secondary is not None else []

    jobs = [(primary, full)] + [(secondary, r.bounds) for r in rois]
    if executor is None:
        raw = [_detect(d, frame, b) for d, b in jobs]
    else:
        futures = [executor.submit(_detect, d, frame, b) for d, b in jobs]
        raw = [f.result() for f in futures]

    primary_dets = _collect(raw[0], full, primary.input_size, frame.image_size, cfg.score_floor)
    secondary_dets: list[Detection] = []
    for roi, dets in zip(rois, raw[1:]):
        secondary_dets.extend(_collect(dets, roi.bounds, secondary.input_size, frame.image_size, cfg.score_floor))

    fused = nms(primary_dets + secondary_dets, cfg.nms_iou, cfg.class_aware)
    return FusedFrameResult(
        frame_id=frame.frame_id,
        detections=tuple(fused),
        n_rois=len(rois),
        primary_count=len(primary_dets),
        secondary_count=len(secondary_dets),
        suppressed_count=len(primary_dets) + len(secondary_dets) - len(fused),
        rois=tuple(rois),
    )


def _collect(dets: Sequence[Detection], bounds: Bounds, input_size, image_size, floor) -> list[Detection]:
    region = _Bounds(bounds)
    out = []
    for d in dets:
        if d.score < floor:
            continue
        m = remap_to_frame(d, region, input_size, image_size)
        if m is not None:
            out.append(m)
    return out
