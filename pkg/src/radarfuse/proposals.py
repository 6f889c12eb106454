"""Fixed-size square ROI proposals centred on projected radar points."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .boxes import iou
from .geometry import PixelPoint


@dataclass(frozen=True)
class RoiProposal:
    """Integer pixel region ``[x0, x1) x [y0, y1)`` in full-image coordinates."""

    x0: int
    y0: int
    x1: int
    y1: int
    source_point_index: int = -1

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate ROI {self.bounds}")

    @property
    def bounds(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


@dataclass(frozen=True)
class ProposalConfig:
    roi_size: int = 240
    max_proposals: int = 64  # automotive radars report fewer than 64 targets per scan
    dedup_iou: Optional[float] = None

    def __post_init__(self):
        if self.roi_size < 16:
            raise ValueError("roi_size must be >= 16")
        if self.max_proposals < 1:
            raise ValueError("max_proposals must be >= 1")
        if self.dedup_iou is not None and not (0 < self.dedup_iou <= 1):
            raise ValueError("dedup_iou must lie in (0, 1]")


def round_half_away(v: float) -> int:
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def _span(center: int, size: int, limit: int) -> tuple[int, int]:
    if size >= limit:
        return 0, limit
    lo = center - size // 2
    lo = max(0, min(lo, limit - size))
    return lo, lo + size


def roi_around(point: PixelPoint, image_size: tuple[int, int], roi_size: int, index: int = -1) -> RoiProposal:
    """Square ROI centred on ``point``, shifted (never shrunk) to fit the image.

    Only when ``roi_size`` exceeds an image dimension is the ROI clipped to it.
    """
    width, height = image_size
    x0, x1 = _span(round_half_away(point.cx), roi_size, width)
    y0, y1 = _span(round_half_away(point.cy), roi_size, height)
    return RoiProposal(x0, y0, x1, y1, index)


def in_image(point: Optional[PixelPoint], image_size: tuple[int, int]) -> bool:
    if point is None:
        return False
    width, height = image_size
    return 0 <= point.cx < width and 0 <= point.cy < height


def make_proposals(
    points: Sequence[Optional[PixelPoint]],
    image_size: tuple[int, int],
    cfg: ProposalConfig = ProposalConfig(),
) -> list[RoiProposal]:
    """One ROI per in-image point, in input order, capped at ``cfg.max_proposals``.

    ``None`` entries (points behind the camera) and points outside the image
    are dropped; ``source_point_index`` refers to the position in ``points``.
    """
    width, height = image_size
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    rois = [
        roi_around(p, image_size, cfg.roi_size, i)
        for i, p in enumerate(points)
        if in_image(p, image_size)
    ]
    if cfg.dedup_iou is not None:
        rois = dedup_proposals(rois, cfg.dedup_iou)
    return rois[: cfg.max_proposals]


def dedup_proposals(proposals: Sequence[RoiProposal], iou_threshold: float) -> list[RoiProposal]:
    """Greedy, order-preserving removal of ROIs overlapping an earlier kept ROI."""
    if not (0 < iou_threshold <= 1):
        raise ValueError("iou_threshold must lie in (0, 1]")
    kept: list[RoiProposal] = []
    for roi in proposals:
        if all(iou(roi, k) < iou_threshold for k in kept):
            kept.append(roi)
    return kept
