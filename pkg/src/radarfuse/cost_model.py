"""Per-frame compute (GFLOPs) and energy accounting.

Energy per frame is

    alpha + beta + gamma * frame_size_mb + (CL_primary + CL_secondary * n_rois) * fps / EE_hw

with CL in FLOPs and EE_hw in FLOPs/J (TOPS/W). The compute term is kept as
written even though ``* fps`` makes it a power (W) rather than J/frame;
``per_frame=True`` drops the fps factor for sensitivity runs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

GIGA = 1e9
TERA = 1e12


@dataclass(frozen=True)
class EnergyParams:
    alpha: float = 0.020  # J/frame, camera capture
    beta: float = 0.92  # J/frame, radar capture
    gamma: float = 0.0039  # J/Mb, data transfer
    frame_size_mb: float = 34.5  # Mb, image + radar point cloud
    fps: float = 20.0
    ee_hw: float = 3.08  # TOPS/W of the accelerator

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")

    def with_overrides(self, **kw) -> "EnergyParams":
        return replace(self, **{k: float(v) for k, v in kw.items() if v is not None})


def frame_gflops(cl_primary: float, cl_secondary: float, n_rois: int) -> float:
    if n_rois < 0:
        raise ValueError("n_rois must be non-negative")
    return cl_primary + cl_secondary * n_rois


def sensor_energy(params: EnergyParams) -> float:
    return params.alpha + params.beta + params.gamma * params.frame_size_mb


def compute_energy(params: EnergyParams, total_gflops: float, per_frame: bool = False) -> float:
    rate = 1.0 if per_frame else params.fps
    return total_gflops * GIGA * rate / (params.ee_hw * TERA)


def frame_energy(params: EnergyParams, total_gflops: float, per_frame: bool = False) -> float:
    """Joules attributed to one frame (see module docstring for units)."""
    return sensor_energy(params) + compute_energy(params, total_gflops, per_frame)


@dataclass
class CostReport:
    cl_primary: float
    cl_secondary: float
    frame_ids: list[int] = field(default_factory=list)
    n_rois: list[int] = field(default_factory=list)
    per_frame_gflops: list[float] = field(default_factory=list)
    per_frame_energy_j: list[float] = field(default_factory=list)
    mean_gflops: float = 0.0
    mean_energy_j: float = 0.0
    params: EnergyParams = field(default_factory=EnergyParams)
    per_frame_mode: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """Rows ``frame_id, n_rois, gflops, energy_j``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame_id", "n_rois", "gflops", "energy_j"])
        for row in zip(self.frame_ids, self.n_rois, self.per_frame_gflops, self.per_frame_energy_j):
            fid, n, g, e = row
            w.writerow([fid, n, repr(g), repr(e)])
        return buf.getvalue()


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def cost_report(
    frame_ids: Sequence[int],
    n_rois: Sequence[int],
    cl_primary: float,
    cl_secondary: float,
    params: EnergyParams = EnergyParams(),
    per_frame: bool = False,
) -> CostReport:
    if len(frame_ids) != len(n_rois):
        raise ValueError("frame_ids and n_rois differ in length")
    gf = [frame_gflops(cl_primary, cl_secondary, n) for n in n_rois]
    en = [frame_energy(params, g, per_frame) for g in gf]
    return CostReport(
        cl_primary=cl_primary,
        cl_secondary=cl_secondary,
        frame_ids=list(frame_ids),
        n_rois=list(n_rois),
        per_frame_gflops=gf,
        per_frame_energy_j=en,
        mean_gflops=_mean(gf),
        mean_energy_j=_mean(en),
        params=params,
        per_frame_mode=per_frame,
    )
