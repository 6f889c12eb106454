import numpy as np
import pytest

from radarfuse.boxes import ClassId
from radarfuse.geometry import CameraIntrinsics, PixelPoint, Pose3, RadarPoint, back_project
from radarfuse.metrics import GroundTruthBox
from radarfuse.scene import Frame

CAM = CameraIntrinsics(fx=1000.0, fy=1000.0, cx0=800.0, cy0=450.0, width=1600, height=900)

ACCEPTANCE_LINES: list[str] = []


def radar_at(px, py, depth=50.0, cam=CAM):
    """Radar point (identity extrinsics) that projects exactly onto (px, py)."""
    x, y, z = back_project(PixelPoint(px, py), depth, cam)
    return RadarPoint(float(x), float(y), float(z))


def make_frame(gts=(), radar_pixels=(), frame_id=0, cam=CAM):
    gts = [g if isinstance(g, GroundTruthBox) else GroundTruthBox(*g) for g in gts]
    radar = [radar_at(*p) for p in radar_pixels]
    return Frame(frame_id, tuple(radar), Pose3.identity(), cam, tuple(gts))


@pytest.fixture
def cam():
    return CAM


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


__all__ = ["CAM", "ClassId", "make_frame", "radar_at"]
