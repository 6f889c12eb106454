"""Rigid transforms and pinhole projection from the radar frame into pixels.

Camera frame convention: x right, y down, z forward (optical axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

ORTHO_TOL = 1e-9
Z_EPS = 1e-6  # metres; anything closer to the image plane counts as behind


class BehindCamera(ValueError):
    """Raised when a point does not lie in front of the camera."""


def _frozen(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Pose3:
    """Rigid transform ``p -> R @ p + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = _frozen(self.rotation, (3, 3))
        t = _frozen(self.translation, (3,))
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise ValueError("pose must be finite")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def __eq__(self, other):
        if not isinstance(other, Pose3):
            return NotImplemented
        return bool(
            np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
        )

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    @staticmethod
    def identity() -> "Pose3":
        return Pose3(np.eye(3), np.zeros(3))

    def apply(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def matrix(self) -> np.ndarray:
        """Returns the 4x4 homogeneous matrix."""
        mat = np.eye(4)
        mat[:3, :3] = self.rotation
        mat[:3, 3] = self.translation
        return mat

    def isclose(self, other: "Pose3", atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0, atol=atol)
        )


def compose(a: Pose3, b: Pose3) -> Pose3:
    """Pose that applies ``b`` first, then ``a``."""
    return Pose3(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(p: Pose3) -> Pose3:
    Rt = p.rotation.T
    return Pose3(Rt, -Rt @ p.translation)


def rotation_about(axis: str, angle_rad: float) -> np.ndarray:
    """Right-handed rotation matrix about a principal axis ('x', 'y' or 'z')."""
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)
    raise ValueError(f"unknown axis {axis!r}")


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx0: float
    cy0: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if not (0 <= self.cx0 <= self.width and 0 <= self.cy0 <= self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def image_size(self) -> tuple[int, int]:
        return (self.width, self.height)

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx0], [0.0, self.fy, self.cy0], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class RadarPoint:
    x: float
    y: float
    z: float
    radial_velocity: Optional[float] = None
    is_clutter: bool = False  # label for analysis only; the pipeline ignores it

    def __post_init__(self):
        xyz = (self.x, self.y, self.z)
        if not all(math.isfinite(v) for v in xyz):
            raise ValueError("radar point must be finite")
        if math.sqrt(self.x**2 + self.y**2 + self.z**2) <= 0:
            raise ValueError("radar point must have positive range")

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class PixelPoint:
    cx: float
    cy: float

    def __post_init__(self):
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError("pixel point must be finite")


def project_camera_point(p_cam: Sequence[float], intr: CameraIntrinsics) -> PixelPoint:
    """Pinhole projection of a point already expressed in the camera frame."""
    x, y, z = (float(v) for v in p_cam)
    if z <= Z_EPS:
        raise BehindCamera(f"point depth {z:g} m is not in front of the camera")
    return PixelPoint(intr.fx * x / z + intr.cx0, intr.fy * y / z + intr.cy0)


def project(point: RadarPoint, radar_to_camera: Pose3, intr: CameraIntrinsics) -> PixelPoint:
    """Project a radar-frame point into pixel coordinates.

    The result may fall outside the image rectangle; callers filter.

    Raises:
        BehindCamera: if the transformed depth is at most ``Z_EPS``.
    """
    return project_camera_point(radar_to_camera.apply(point.xyz), intr)


def back_project(px: PixelPoint, depth: float, intr: CameraIntrinsics) -> np.ndarray:
    """Camera-frame point at ``depth`` metres along the ray through ``px``."""
    return np.array(
        [(px.cx - intr.cx0) * depth / intr.fx, (px.cy - intr.cy0) * depth / intr.fy, depth]
    )


def project_points(
    points: Sequence[RadarPoint], radar_to_camera: Pose3, intr: CameraIntrinsics
) -> list[Optional[PixelPoint]]:
    """Projects every point; entries behind the camera come back as None."""
    out: list[Optional[PixelPoint]] = []
    for p in points:
        try:
            out.append(project(p, radar_to_camera, intr))
        except BehindCamera:
            out.append(None)
    return out
