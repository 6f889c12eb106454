"""Axis-aligned box helpers shared by proposals, detectors, fusion and metrics.

A "box" is anything with ``x0, y0, x1, y1`` attributes (x0 < x1, y0 < y1).
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Protocol


class ClassId(str, Enum):
    CAR = "car"
    TRUCK = "truck"
    BUS = "bus"
    PEDESTRIAN = "pedestrian"
    BICYCLE = "bicycle"
    MOTORCYCLE = "motorcycle"


CLASSES: tuple[ClassId, ...] = tuple(ClassId)

# Label spellings seen in COCO-trained detectors and nuScenes exports.
DEFAULT_CLASS_MAP: dict[str, ClassId] = {
    "car": ClassId.CAR,
    "truck": ClassId.TRUCK,
    "trailer": ClassId.TRUCK,
    "bus": ClassId.BUS,
    "person": ClassId.PEDESTRIAN,
    "pedestrian": ClassId.PEDESTRIAN,
    "bicycle": ClassId.BICYCLE,
    "cycle": ClassId.BICYCLE,
    "motorcycle": ClassId.MOTORCYCLE,
    "vehicle.car": ClassId.CAR,
    "vehicle.truck": ClassId.TRUCK,
    "vehicle.trailer": ClassId.TRUCK,
    "vehicle.bus.bendy": ClassId.BUS,
    "vehicle.bus.rigid": ClassId.BUS,
    "vehicle.bicycle": ClassId.BICYCLE,
    "vehicle.motorcycle": ClassId.MOTORCYCLE,
    "human.pedestrian.adult": ClassId.PEDESTRIAN,
    "human.pedestrian.child": ClassId.PEDESTRIAN,
    "human.pedestrian.construction_worker": ClassId.PEDESTRIAN,
    "human.pedestrian.police_officer": ClassId.PEDESTRIAN,
}


def to_class(label, class_map: Optional[dict[str, ClassId]] = None) -> ClassId:
    """Maps a raw label onto one of the six evaluation classes.

    Raises:
        ValueError: for labels the map does not cover.
    """
    if isinstance(label, ClassId):
        return label
    table = DEFAULT_CLASS_MAP if class_map is None else class_map
    key = str(label).strip().lower()
    if key in table:
        return table[key]
    try:
        return ClassId(key)
    except ValueError:
        raise ValueError(f"unknown class label {label!r}") from None


class BoxLike(Protocol):
    x0: float
    y0: float
    x1: float
    y1: float


def area(b: BoxLike) -> float:
    return max(0.0, b.x1 - b.x0) * max(0.0, b.y1 - b.y0)


def intersection_area(a: BoxLike, b: BoxLike) -> float:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BoxLike, b: BoxLike) -> float:
    """Intersection over union, in [0, 1]."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    union = area(a) + area(b) - inter
    return min(1.0, inter / union)
