"""Sequence-level runs: fusion or primary-only over a scene, plus sweeps."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .cost_model import CostReport, EnergyParams, cost_report
from .detector import DetectorProfile, SyntheticDetector, flops_for
from .fusion import FusedFrameResult, FusionConfig, fuse_frame
from .metrics import MetricsReport, evaluate, per_frame_csv
from .scene import Frame, ground_truth_by_frame

log = logging.getLogger(__name__)

MODES = ("fusion", "primary-only")
SWEEP_AXES = ("roi_size", "secondary_input_size")


@dataclass(frozen=True)
class RunSpec:
    scene: Optional[Path] = None
    primary: str = "yolov3-spp"
    secondary: str = "ssdlite"
    fusion: FusionConfig = field(default_factory=FusionConfig)
    match_iou: float = 0.4
    energy: EnergyParams = field(default_factory=EnergyParams)
    per_frame_energy: bool = False
    out: Optional[Path] = None
    mode: str = "fusion"
    seed: int = 0
    loc_noise_frac: float = 0.03
    false_positive_rate: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        # raises UnknownDetector for names missing from the catalog
        flops_for(self.primary, self.fusion.primary_input_size)
        flops_for(self.secondary, self.fusion.secondary_input_size)
        if not (0 < self.match_iou <= 1):
            raise ValueError("match_iou must lie in (0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def primary_detector(self) -> SyntheticDetector:
        prof = DetectorProfile(
            self.fusion.primary_input_size,
            loc_noise_frac=self.loc_noise_frac,
            false_positive_rate=self.false_positive_rate,
            seed=2 * self.seed,
        )
        return SyntheticDetector(self.primary, prof)

    def secondary_detector(self) -> SyntheticDetector:
        prof = DetectorProfile(
            self.fusion.secondary_input_size,
            loc_noise_frac=self.loc_noise_frac,
            false_positive_rate=self.false_positive_rate,
            seed=2 * self.seed + 1,
        )
        return SyntheticDetector(self.secondary, prof)


@dataclass
class RunResult:
    spec: RunSpec
    results: list[FusedFrameResult]
    metrics: MetricsReport
    cost: CostReport

    def summary_row(self) -> str:
        sec = "-" if self.spec.mode == "primary-only" else f"{self.spec.secondary}({self.spec.fusion.secondary_input_size})"
        m, c = self.metrics, self.cost
        return _ROW.format(
            self.spec.mode, f"{self.spec.primary}({self.spec.fusion.primary_input_size})", sec,
            f"{m.recall:.3f}", f"{m.precision:.3f}", m.false_negatives, f"{c.mean_energy_j:.3f}", f"{c.mean_gflops:.1f}",
        ).rstrip()


# column layout of the summary table: mode, detectors, recall, precision, FN, energy (J), GFLOPs
_ROW = "{:<13}{:<18}{:<15}{:>6} {:>6} {:>6} {:>7} {:>8}"
SUMMARY_HEADER = _ROW.format("Mode", "P det", "Sec det.", "Rcll", "Prcn", "FN", "TE", "GF").rstrip()


def run_frames(frames: Sequence[Frame], spec: RunSpec) -> list[FusedFrameResult]:
    primary = spec.primary_detector()
    secondary = spec.secondary_detector() if spec.mode == "fusion" else None

    def one(frame):
        return fuse_frame(frame, primary, secondary, spec.fusion)

    if spec.workers == 1:
        return [one(f) for f in frames]
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        # map preserves input order, so the reduction below is order-stable
        return list(pool.map(one, frames))


def run(frames: Sequence[Frame], spec: RunSpec) -> RunResult:
    results = run_frames(frames, spec)
    metrics = evaluate(results, ground_truth_by_frame(frames), spec.match_iou)
    cl_p = flops_for(spec.primary, spec.fusion.primary_input_size)
    cl_s = flops_for(spec.secondary, spec.fusion.secondary_input_size) if spec.mode == "fusion" else 0.0
    cost = cost_report(
        [r.frame_id for r in results], [r.n_rois for r in results], cl_p, cl_s, spec.energy, spec.per_frame_energy
    )
    return RunResult(spec, results, metrics, cost)


def write_outputs(rr: RunResult, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "metrics.json": rr.metrics.to_json(),
        "cost.json": rr.cost.to_json(),
        "cost.csv": rr.cost.to_csv(),
        "per_frame.csv": per_frame_csv(rr.metrics, rr.results, rr.cost.per_frame_gflops),
    }
    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text)
        paths.append(p)
    return paths


def with_axis_value(spec: RunSpec, axis: str, value: int) -> RunSpec:
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    return replace(spec, fusion=replace(spec.fusion, **{axis: int(value)}))


@dataclass(frozen=True)
class SweepRow:
    value: int
    recall: float
    mean_gflops: float
    precision: float
    mean_energy_j: float


def sweep(frames: Sequence[Frame], spec: RunSpec, axis: str, values: Sequence[int]) -> list[SweepRow]:
    """One run per value with everything else fixed; rows sorted by value."""
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in sorted(set(int(x) for x in values)):
        rr = run(frames, with_axis_value(spec, axis, v))
        log.info("%s=%d recall=%.4f gflops=%.2f", axis, v, rr.metrics.recall, rr.cost.mean_gflops)
        rows.append(SweepRow(v, rr.metrics.recall, rr.cost.mean_gflops, rr.metrics.precision, rr.cost.mean_energy_j))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "recall", "mean_gflops", "precision", "mean_energy_j"])
    for r in rows:
        w.writerow([r.value, repr(r.recall), repr(r.mean_gflops), repr(r.precision), repr(r.mean_energy_j)])
    return buf.getvalue()
