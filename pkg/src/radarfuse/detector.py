"""Detector contract, FLOPs catalog, and a deterministic synthetic detector.

The synthetic detector never looks at pixels. It decides per ground-truth
object whether it is found, using a linear ramp in *effective* pixel area:
the object's visible area after its region is rescaled to the detector's
square input. Small objects in a large region shrink below the ramp and are
missed; cropping a tight region around them and upscaling recovers them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

from .boxes import CLASSES, BoxLike, ClassId, area
from .rng import keyed_rng

Bounds = tuple[int, int, int, int]

SCORE_MIN = 0.05
_FP_STREAM = 1  # tag separating false-positive draws from per-object draws
_OBJ_STREAM = 0


@dataclass(frozen=True)
class Detection:
    x0: float
    y0: float
    x1: float
    y1: float
    class_id: ClassId
    score: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate detection box ({self.x0}, {self.y0}, {self.x1}, {self.y1})")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        object.__setattr__(self, "class_id", ClassId(self.class_id))


@dataclass(frozen=True)
class DetectorProfile:
    """Behavioural knobs of the synthetic detector."""

    input_size: int
    p_max: float = 0.98
    area_lo: float = 400.0
    area_hi: float = 4000.0
    visibility_min: float = 0.25
    loc_noise_frac: float = 0.03
    false_positive_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.input_size <= 0:
            raise ValueError("input_size must be positive")
        if not (0 < self.area_lo < self.area_hi):
            raise ValueError("need 0 < area_lo < area_hi")
        if not (0 <= self.p_max <= 1):
            raise ValueError("p_max must lie in [0, 1]")
        if not (0 <= self.visibility_min <= 1):
            raise ValueError("visibility_min must lie in [0, 1]")
        if self.loc_noise_frac < 0 or self.false_positive_rate < 0:
            raise ValueError("noise rates must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class DetectorInvocation:
    """One detector call: the unit of compute accounting."""

    region: Optional[Bounds]  # None means the full image
    input_size: int
    detections: tuple[Detection, ...]
    flops: float  # GFLOPs

    def __post_init__(self):
        if not self.flops > 0:
            raise ValueError("flops must be positive")


class Detector(Protocol):
    """What the fusion pipeline needs from a detector backend.

    ``detect`` receives the frame and the pixel bounds of the region to look
    at, and returns boxes in the detector's *input* frame: the region,
    zero-padded at the bottom/right to a square, scaled to
    ``input_size x input_size``. Backends that are not thread-safe set
    ``exclusive = True`` and the pipeline serialises their calls.
    """

    name: str
    input_size: int
    exclusive: bool

    @property
    def gflops(self) -> float: ...

    def detect(self, frame, region: Bounds) -> list[Detection]: ...


# ---------------------------------------------------------------- catalog

class UnknownDetector(KeyError):
    pass


Catalog = dict[str, dict[int, float]]


def load_catalog(path: Union[str, Path, None] = None) -> Catalog:
    """Reads ``{"anchors": [{"name", "input_size", "gflops"}, ...]}``."""
    if path is None:
        text = resources.files("radarfuse").joinpath("data/detectors.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    catalog: Catalog = {}
    for row in doc["anchors"]:
        size = int(row["input_size"])
        gflops = float(row["gflops"])
        if size <= 0 or gflops <= 0:
            raise ValueError(f"bad catalog row {row}")
        catalog.setdefault(str(row["name"]).lower(), {})[size] = gflops
    return catalog


@lru_cache(maxsize=1)
def default_catalog() -> Catalog:
    return load_catalog()


def flops_for(detector_name: str, input_size: int, catalog: Optional[Catalog] = None) -> float:
    """GFLOPs of one forward pass at a square ``input_size``.

    Anchored sizes return the catalog value; others scale quadratically from
    the nearest anchor (ties go to the larger anchor).
    """
    table = (catalog or default_catalog()).get(detector_name.lower())
    if table is None:
        raise UnknownDetector(detector_name)
    if input_size <= 0:
        raise ValueError("input_size must be positive")
    if input_size in table:
        return table[input_size]
    anchor = min(table, key=lambda s: (abs(s - input_size), -s))
    return table[anchor] * (input_size / anchor) ** 2


# ---------------------------------------------------------------- synthetic model

def _clip_to(b: BoxLike, region: Bounds) -> Optional[tuple[float, float, float, float]]:
    rx0, ry0, rx1, ry1 = region
    x0, y0 = max(b.x0, rx0), max(b.y0, ry0)
    x1, y1 = min(b.x1, rx1), min(b.y1, ry1)
    if x1 <= x0 or y1 <= y0:
        return None
    return (x0, y0, x1, y1)


def region_scale(region: Bounds, input_size: int) -> float:
    """Uniform factor mapping region pixels to detector-input pixels."""
    rx0, ry0, rx1, ry1 = region
    return input_size / max(rx1 - rx0, ry1 - ry0)


def detection_probability(gt_box: BoxLike, region: Bounds, input_size: int, profile: DetectorProfile) -> float:
    vis = _clip_to(gt_box, region)
    if vis is None:
        return 0.0
    vis_area = (vis[2] - vis[0]) * (vis[3] - vis[1])
    if vis_area / area(gt_box) < profile.visibility_min:
        return 0.0
    a_eff = vis_area * region_scale(region, input_size) ** 2
    ramp = (a_eff - profile.area_lo) / (profile.area_hi - profile.area_lo)
    return profile.p_max * min(1.0, max(0.0, ramp))


class SyntheticDetector:
    """Ground-truth driven stand-in for a neural detector.

    Args:
        name: catalog name used for FLOPs accounting.
        profile: detection behaviour; ``profile.input_size`` is the network input.
    """

    exclusive = False

    def __init__(self, name: str, profile: DetectorProfile, catalog: Optional[Catalog] = None):
        self.name = name
        self.profile = profile
        self._gflops = flops_for(name, profile.input_size, catalog)

    def __repr__(self):
        return f"SyntheticDetector({self.name!r}, input_size={self.input_size})"

    @property
    def input_size(self) -> int:
        return self.profile.input_size

    @property
    def gflops(self) -> float:
        return self._gflops

    def stream_key(self, frame_id: int, region: Bounds) -> tuple[int, ...]:
        return (self.profile.seed, frame_id, self.input_size, *region)

    def detect(self, frame, region: Bounds) -> list[Detection]:
        prof = self.profile
        key = self.stream_key(frame.frame_id, region)
        scale = region_scale(region, self.input_size)
        rx0, ry0, rx1, ry1 = region
        content_w, content_h = (rx1 - rx0) * scale, (ry1 - ry0) * scale

        out: list[Detection] = []
        for idx, gt in enumerate(frame.ground_truth):
            p = detection_probability(gt, region, self.input_size, prof)
            if p <= 0.0:
                continue
            rng = keyed_rng(*key, _OBJ_STREAM, idx)
            if rng.random() >= p:
                continue
            vx0, vy0, vx1, vy1 = _clip_to(gt, region)
            box = [(vx0 - rx0) * scale, (vy0 - ry0) * scale, (vx1 - rx0) * scale, (vy1 - ry0) * scale]
            if prof.loc_noise_frac > 0:
                sx = prof.loc_noise_frac * (box[2] - box[0])
                sy = prof.loc_noise_frac * (box[3] - box[1])
                n = rng.standard_normal(4)
                box = [box[0] + sx * n[0], box[1] + sy * n[1], box[2] + sx * n[2], box[3] + sy * n[3]]
            det = _make_detection(box, content_w, content_h, gt.class_id, min(1.0, max(SCORE_MIN, p)))
            if det is not None:
                out.append(det)

        if prof.false_positive_rate > 0:
            out.extend(self._false_positives(key, content_w, content_h))
        return out

    def _false_positives(self, key, content_w, content_h) -> list[Detection]:
        rng = keyed_rng(*key, _FP_STREAM)
        out = []
        for _ in range(int(rng.poisson(self.profile.false_positive_rate))):
            cls = CLASSES[int(rng.integers(len(CLASSES)))]
            w, h = rng.uniform(0.05, 0.3, size=2) * self.input_size
            cx, cy = rng.uniform(0, content_w), rng.uniform(0, content_h)
            score = float(rng.uniform(SCORE_MIN, 0.6))
            det = _make_detection([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2], content_w, content_h, cls, score)
            if det is not None:
                out.append(det)
        return out


def _make_detection(box: Sequence[float], w: float, h: float, cls, score: float) -> Optional[Detection]:
    x0, x1 = sorted((box[0], box[2]))
    y0, y1 = sorted((box[1], box[3]))
    x0, x1 = min(max(x0, 0.0), w), min(max(x1, 0.0), w)
    y0, y1 = min(max(y0, 0.0), h), min(max(y1, 0.0), h)
    if not (x0 < x1 and y0 < y1) or not all(map(math.isfinite, (x0, y0, x1, y1))):
        return None
    return Detection(float(x0), float(y0), float(x1), float(y1), ClassId(cls), float(score))


def invoke(detector: Detector, frame, region: Optional[Bounds] = None) -> DetectorInvocation:
    """Runs ``detector`` on ``region`` (full image when None) and records its cost."""
    bounds = region if region is not None else (0, 0, *frame.image_size)
    dets = detector.detect(frame, bounds)
    return DetectorInvocation(region, detector.input_size, tuple(dets), detector.gflops)
