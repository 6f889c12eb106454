"""Sequence model, JSON sequence files, and the synthetic scene generator.

Sequence file layout::

    {
      "format": "radarfuse-sequence", "version": 1,
      "camera": {
        "intrinsics": {"fx", "fy", "cx0", "cy0", "width", "height"},
        "radar_to_camera": {"rotation": [[3x3]], "translation": [3]}
      },
      "frames": [
        {"frame_id": 0,
         "image_path": "optional/path.jpg",
         "radar": [{"x", "y", "z", "v"?, "is_clutter"?}],
         "gt": [{"x0", "y0", "x1", "y1", "class", "occluded"?}],
         "intrinsics"?: {...}, "radar_to_camera"?: {...}}
      ]
    }

Per-frame ``intrinsics`` / ``radar_to_camera`` override the sequence camera.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .boxes import CLASSES, ClassId, to_class
from .geometry import CameraIntrinsics, Pose3, RadarPoint, inverse
from .metrics import GroundTruthBox

FORMAT = "radarfuse-sequence"
VERSION = 1
REFERENCE_SCENE = "data/reference_scene.json"

# (width, height) in metres of the upright rectangle each class occupies
OBJECT_SIZE_M: dict[ClassId, tuple[float, float]] = {
    ClassId.CAR: (4.5, 1.8),
    ClassId.TRUCK: (6.5, 3.2),
    ClassId.BUS: (11.0, 3.2),
    ClassId.PEDESTRIAN: (0.6, 1.7),
    ClassId.BICYCLE: (1.7, 1.2),
    ClassId.MOTORCYCLE: (2.0, 1.3),
}

# nuScenes front camera, roughly
DEFAULT_CAMERA = CameraIntrinsics(fx=1266.4, fy=1266.4, cx0=816.3, cy0=491.5, width=1600, height=900)

# radar axes: x forward, y left, z up; mounted 0.8 m below and 1.5 m ahead of the camera
DEFAULT_RADAR_TO_CAMERA = Pose3(
    np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]),
    np.array([0.0, 0.8, 1.5]),
)


class SchemaError(ValueError):
    """A sequence or config document violates its schema."""


@dataclass(frozen=True)
class Frame:
    frame_id: int
    radar_points: tuple[RadarPoint, ...]
    radar_to_camera: Pose3
    intrinsics: CameraIntrinsics
    ground_truth: tuple[GroundTruthBox, ...]
    image_path: Optional[str] = None

    def __post_init__(self):
        if int(self.frame_id) != self.frame_id or self.frame_id < 0:
            raise ValueError(f"frame_id must be a non-negative integer, got {self.frame_id!r}")
        object.__setattr__(self, "radar_points", tuple(self.radar_points))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        w, h = self.image_size
        for g in self.ground_truth:
            if g.x0 < 0 or g.y0 < 0 or g.x1 > w or g.y1 > h:
                raise ValueError(
                    f"frame {self.frame_id}: ground-truth box ({g.x0}, {g.y0}, {g.x1}, {g.y1}) "
                    f"exceeds image {w}x{h}"
                )

    @property
    def image_size(self) -> tuple[int, int]:
        return self.intrinsics.image_size


# ---------------------------------------------------------------- generator config

def _default_mix() -> dict[str, float]:
    return {"car": 0.5, "truck": 0.1, "bus": 0.05, "pedestrian": 0.25, "bicycle": 0.05, "motorcycle": 0.05}


@dataclass(frozen=True)
class SceneGenConfig:
    n_frames: int = 200
    objects_per_frame: tuple[int, int] = (2, 8)  # inclusive range
    class_mix: Mapping[str, float] = field(default_factory=_default_mix)
    depth_range: tuple[float, float] = (5.0, 120.0)
    radar_hit_prob: float = 0.9
    radar_pos_noise_m: float = 0.5
    clutter_rate: float = 3.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "objects_per_frame", tuple(int(v) for v in self.objects_per_frame))
        object.__setattr__(self, "depth_range", tuple(float(v) for v in self.depth_range))
        try:
            mix = {to_class(k).value: float(v) for k, v in self.class_mix.items()}
        except ValueError as e:
            raise SchemaError(f"class_mix: {e}") from None
        object.__setattr__(self, "class_mix", mix)

        if self.n_frames < 0:
            raise SchemaError("n_frames must be non-negative")
        lo, hi = self.objects_per_frame
        if not (0 <= lo <= hi):
            raise SchemaError("objects_per_frame must be a range 0 <= lo <= hi")
        if any(not (0 <= p <= 1) for p in mix.values()) or not math.isclose(sum(mix.values()), 1.0, abs_tol=1e-9):
            raise SchemaError(f"class_mix must hold probabilities summing to 1, got sum {sum(mix.values()):g}")
        dlo, dhi = self.depth_range
        if not (0 < dlo < dhi):
            raise SchemaError("depth_range must satisfy 0 < near < far")
        if not (0 <= self.radar_hit_prob <= 1):
            raise SchemaError("radar_hit_prob must lie in [0, 1]")
        if self.radar_pos_noise_m < 0:
            raise SchemaError("radar_pos_noise_m must be non-negative")
        if self.clutter_rate < 0:
            raise SchemaError("clutter_rate must be non-negative")
        if self.seed < 0:
            raise SchemaError("seed must be non-negative")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SceneGenConfig":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise SchemaError(f"unknown config field(s): {', '.join(sorted(extra))}")
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["objects_per_frame"] = list(self.objects_per_frame)
        d["depth_range"] = list(self.depth_range)
        return d


def reference_config() -> SceneGenConfig:
    """The bundled reference scene: mid/far-range traffic, seed 42."""
    return SceneGenConfig(
        n_frames=40,
        objects_per_frame=(4, 10),
        class_mix={"car": 0.55, "truck": 0.1, "bus": 0.05, "pedestrian": 0.2, "bicycle": 0.05, "motorcycle": 0.05},
        depth_range=(8.0, 80.0),
        radar_hit_prob=0.9,
        radar_pos_noise_m=0.5,
        clutter_rate=3.0,
        seed=42,
    )


# ---------------------------------------------------------------- generation

def generate_scene(
    cfg: SceneGenConfig,
    camera: CameraIntrinsics = DEFAULT_CAMERA,
    radar_to_camera: Pose3 = DEFAULT_RADAR_TO_CAMERA,
) -> list[Frame]:
    """Deterministic synthetic sequence with exact 2D ground truth.

    Objects are upright rectangles facing the camera, placed uniformly in the
    part of the frustum where they are fully visible; each may leave one radar
    return at its centroid (plus Gaussian noise), and clutter returns are
    sprinkled uniformly through the frustum.
    """
    rng = np.random.default_rng(cfg.seed)
    classes = [c for c in CLASSES if cfg.class_mix.get(c.value, 0.0) > 0]
    probs = np.array([cfg.class_mix[c.value] for c in classes])
    probs = probs / probs.sum()
    cam_to_radar = inverse(radar_to_camera)
    dlo, dhi = cfg.depth_range

    frames = []
    for fid in range(cfg.n_frames):
        n_obj = int(rng.integers(cfg.objects_per_frame[0], cfg.objects_per_frame[1] + 1))
        gts: list[GroundTruthBox] = []
        radar: list[RadarPoint] = []
        for _ in range(n_obj):
            cls = classes[int(rng.choice(len(classes), p=probs))]
            W, H = OBJECT_SIZE_M[cls]
            d_fit = max(camera.fx * W / camera.width, camera.fy * H / camera.height)
            near = max(dlo, d_fit)
            if near >= dhi:
                raise SchemaError(f"depth_range: a {cls.value} cannot fit in the image closer than {dhi} m")
            d = float(rng.uniform(near, dhi))
            w_px, h_px = camera.fx * W / d, camera.fy * H / d
            x0 = float(rng.uniform(0.0, camera.width - w_px))
            y0 = float(rng.uniform(0.0, camera.height - h_px))
            gts.append(GroundTruthBox(x0, y0, x0 + w_px, y0 + h_px, cls))

            center = np.array([
                (x0 + w_px / 2 - camera.cx0) * d / camera.fx,
                (y0 + h_px / 2 - camera.cy0) * d / camera.fy,
                d,
            ])
            hit = rng.random() < cfg.radar_hit_prob
            noise = rng.normal(0.0, cfg.radar_pos_noise_m, size=3) if cfg.radar_pos_noise_m > 0 else np.zeros(3)
            v = float(rng.uniform(-15.0, 15.0))
            if hit:
                p = cam_to_radar.apply(center + noise)
                radar.append(RadarPoint(float(p[0]), float(p[1]), float(p[2]), v))

        for _ in range(int(rng.poisson(cfg.clutter_rate))):
            d = float(rng.uniform(dlo, dhi))
            u = float(rng.uniform(0.0, camera.width))
            w = float(rng.uniform(0.0, camera.height))
            p_cam = np.array([(u - camera.cx0) * d / camera.fx, (w - camera.cy0) * d / camera.fy, d])
            p = cam_to_radar.apply(p_cam)
            radar.append(RadarPoint(float(p[0]), float(p[1]), float(p[2]), 0.0, is_clutter=True))

        frames.append(Frame(fid, tuple(radar), radar_to_camera, camera, tuple(gts)))
    return frames


# ---------------------------------------------------------------- file I/O

def _intrinsics_doc(c: CameraIntrinsics) -> dict:
    return {"fx": c.fx, "fy": c.fy, "cx0": c.cx0, "cy0": c.cy0, "width": c.width, "height": c.height}


def _pose_doc(p: Pose3) -> dict:
    return {"rotation": p.rotation.tolist(), "translation": p.translation.tolist()}


def frames_to_doc(frames: Sequence[Frame], camera: Optional[CameraIntrinsics] = None,
                  radar_to_camera: Optional[Pose3] = None) -> dict:
    """Serialisable document; calibration shared by the first frame goes to ``camera``."""
    if frames:
        camera = camera or frames[0].intrinsics
        radar_to_camera = radar_to_camera or frames[0].radar_to_camera
    camera = camera or DEFAULT_CAMERA
    radar_to_camera = radar_to_camera or DEFAULT_RADAR_TO_CAMERA
    out = []
    for f in frames:
        rec: dict = {"frame_id": f.frame_id}
        if f.image_path is not None:
            rec["image_path"] = f.image_path
        if f.intrinsics != camera:
            rec["intrinsics"] = _intrinsics_doc(f.intrinsics)
        if f.radar_to_camera != radar_to_camera:
            rec["radar_to_camera"] = _pose_doc(f.radar_to_camera)
        rec["radar"] = [
            {"x": p.x, "y": p.y, "z": p.z, **({} if p.radial_velocity is None else {"v": p.radial_velocity}),
             "is_clutter": p.is_clutter}
            for p in f.radar_points
        ]
        rec["gt"] = [
            {"x0": g.x0, "y0": g.y0, "x1": g.x1, "y1": g.y1, "class": g.class_id.value, "occluded": g.occluded}
            for g in f.ground_truth
        ]
        out.append(rec)
    return {
        "format": FORMAT,
        "version": VERSION,
        "camera": {"intrinsics": _intrinsics_doc(camera), "radar_to_camera": _pose_doc(radar_to_camera)},
        "frames": out,
    }


def save_frames(frames: Sequence[Frame], path: Union[str, Path], camera: Optional[CameraIntrinsics] = None) -> None:
    Path(path).write_text(json.dumps(frames_to_doc(frames, camera), indent=1) + "\n")


def _req(doc: Mapping, key: str, where: str):
    if not isinstance(doc, Mapping) or key not in doc:
        raise SchemaError(f"{where}: missing field '{key}'")
    return doc[key]


def _parse_intrinsics(d, where: str) -> CameraIntrinsics:
    try:
        return CameraIntrinsics(
            float(_req(d, "fx", where)), float(_req(d, "fy", where)),
            float(_req(d, "cx0", where)), float(_req(d, "cy0", where)),
            int(_req(d, "width", where)), int(_req(d, "height", where)),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"{where}: invalid 'intrinsics': {e}") from None


def _parse_pose(d, where: str) -> Pose3:
    try:
        return Pose3(np.array(_req(d, "rotation", where), dtype=float), np.array(_req(d, "translation", where), dtype=float))
    except (TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"{where}: invalid 'radar_to_camera': {e}") from None


def frames_from_doc(doc: Mapping, class_map: Optional[Mapping[str, ClassId]] = None) -> list[Frame]:
    """Parses and validates a sequence document.

    Raises:
        SchemaError: naming the offending field and, where known, the frame_id.
    """
    cam = _req(doc, "camera", "sequence")
    intr = _parse_intrinsics(_req(cam, "intrinsics", "camera"), "camera.intrinsics")
    pose = _parse_pose(_req(cam, "radar_to_camera", "camera"), "camera.radar_to_camera")
    records = _req(doc, "frames", "sequence")
    if not isinstance(records, list):
        raise SchemaError("sequence: 'frames' must be a list")

    frames, seen = [], set()
    for k, rec in enumerate(records):
        fid = _req(rec, "frame_id", f"frames[{k}]")
        where = f"frame_id {fid}"
        if fid in seen:
            raise SchemaError(f"{where}: duplicate 'frame_id'")
        seen.add(fid)
        f_intr = _parse_intrinsics(rec["intrinsics"], f"{where} intrinsics") if "intrinsics" in rec else intr
        f_pose = _parse_pose(rec["radar_to_camera"], f"{where} radar_to_camera") if "radar_to_camera" in rec else pose
        try:
            radar = tuple(
                RadarPoint(float(_req(r, "x", where)), float(_req(r, "y", where)), float(_req(r, "z", where)),
                           None if r.get("v") is None else float(r["v"]), bool(r.get("is_clutter", False)))
                for r in _req(rec, "radar", where)
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, SchemaError):
                raise
            raise SchemaError(f"{where}: invalid 'radar' entry: {e}") from None
        try:
            gts = tuple(
                GroundTruthBox(float(_req(g, "x0", where)), float(_req(g, "y0", where)),
                               float(_req(g, "x1", where)), float(_req(g, "y1", where)),
                               to_class(_req(g, "class", where), class_map), bool(g.get("occluded", False)))
                for g in _req(rec, "gt", where)
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, SchemaError):
                raise
            raise SchemaError(f"{where}: invalid 'gt' entry: {e}") from None
        try:
            frames.append(Frame(fid, radar, f_pose, f_intr, gts, rec.get("image_path")))
        except ValueError as e:
            raise SchemaError(f"{where}: {e}") from None
    return frames


def load_frames(path: Union[str, Path], class_map: Optional[Mapping[str, ClassId]] = None) -> list[Frame]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from None
    return frames_from_doc(doc, class_map)


def from_records(
    records: Iterable[Mapping],
    camera: Mapping,
    class_map: Optional[Mapping[str, ClassId]] = None,
) -> list[Frame]:
    """Builds frames from pre-exported per-frame records (e.g. nuScenes dumps).

    ``records`` follow the per-frame layout of the sequence file and
    ``camera`` the top-level ``camera`` object; category names such as
    ``vehicle.car`` or COCO's ``person`` go through ``class_map``.
    """
    return frames_from_doc({"camera": camera, "frames": list(records)}, class_map)


def reference_scene() -> list[Frame]:
    """The bundled reference sequence (identical to ``generate_scene(reference_config())``)."""
    text = resources.files("radarfuse").joinpath(REFERENCE_SCENE).read_text()
    return frames_from_doc(json.loads(text))


def ground_truth_by_frame(frames: Sequence[Frame]) -> dict[int, tuple[GroundTruthBox, ...]]:
    return {f.frame_id: f.ground_truth for f in frames}
