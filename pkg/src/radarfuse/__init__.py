"""Radar-guided ROI fusion for 2D object detection."""

from .boxes import ClassId, iou
from .cost_model import CostReport, EnergyParams, frame_energy, frame_gflops
from .detector import Detection, DetectorProfile, SyntheticDetector, detection_probability, flops_for
from .fusion import FusedFrameResult, FusionConfig, fuse_frame, nms, remap_to_frame
from .geometry import BehindCamera, CameraIntrinsics, PixelPoint, Pose3, RadarPoint, compose, inverse, project
from .metrics import GroundTruthBox, MetricsReport, evaluate, match_detections
from .proposals import ProposalConfig, RoiProposal, dedup_proposals, make_proposals
from .scene import Frame, SceneGenConfig, generate_scene, load_frames, save_frames

__version__ = "0.1.0"
