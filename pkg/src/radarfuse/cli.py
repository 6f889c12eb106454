"""Command-line driver: ``generate``, ``evaluate`` and ``sweep``.

Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from dataclasses import replace
from pathlib import Path

from .cost_model import EnergyParams
from .detector import UnknownDetector
from .fusion import FusionConfig
from .runner import MODES, SUMMARY_HEADER, SWEEP_AXES, RunSpec, run, sweep, sweep_csv, write_outputs
from .scene import SceneGenConfig, SchemaError, generate_scene, load_frames, reference_config, save_frames

log = logging.getLogger("radarfuse")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _detector_arg(text: str) -> tuple[str, int]:
    name, sep, size = text.rpartition(":")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME:SIZE, got {text!r}")
    try:
        return name, int(size)
    except ValueError:
        raise argparse.ArgumentTypeError(f"input size must be an integer in {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("at least one value is required")
    return vals


def _run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", type=Path, required=True, help="sequence JSON file")
    p.add_argument("--primary", type=_detector_arg, default=("yolov3-spp", 416), metavar="NAME:SIZE")
    p.add_argument("--secondary", type=_detector_arg, default=("ssdlite", 300), metavar="NAME:SIZE")
    p.add_argument("--roi-size", type=int, default=240)
    p.add_argument("--nms-iou", type=float, default=0.45)
    p.add_argument("--match-iou", type=float, default=0.4)
    p.add_argument("--mode", choices=MODES, default="fusion")
    p.add_argument("--seed", type=int, default=0, help="detector seed")
    p.add_argument("--loc-noise", type=float, default=0.03, help="box noise as a fraction of box size")
    p.add_argument("--fp-rate", type=float, default=0.0, help="expected false positives per detector call")
    p.add_argument("--dedup-iou", type=float, default=None)
    p.add_argument("--class-agnostic-nms", action="store_true")
    p.add_argument("--workers", type=int, default=1, help="frames evaluated in parallel")
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--ee-hw", type=float, default=None, help="accelerator efficiency, TOPS/W")
    p.add_argument("--per-frame-energy", action="store_true", help="drop the fps factor from the compute term")
    p.add_argument("--out", type=Path, required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radarfuse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic sequence file")
    g.add_argument("--config", type=Path, default=None, help="SceneGenConfig JSON (defaults if omitted)")
    g.add_argument("--reference", action="store_true", help="use the bundled reference scene config")
    g.add_argument("--seed", type=int, default=None, help="override the config seed")
    g.add_argument("--frames", type=int, default=None, help="override n_frames")
    g.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("evaluate", help="run fusion or primary-only on a sequence")
    _run_args(e)

    s = sub.add_parser("sweep", help="evaluate over values of one hyperparameter")
    _run_args(s)
    s.add_argument("--sweep-axis", choices=SWEEP_AXES, required=True)
    s.add_argument("--values", type=_int_list, required=True)
    return parser


def spec_from_args(args) -> RunSpec:
    (p_name, p_size), (s_name, s_size) = args.primary, args.secondary
    try:
        fusion = FusionConfig(
            primary_input_size=p_size,
            secondary_input_size=s_size,
            roi_size=args.roi_size,
            nms_iou=args.nms_iou,
            dedup_iou=args.dedup_iou,
            class_aware=not args.class_agnostic_nms,
        )
        energy = EnergyParams().with_overrides(fps=args.fps, ee_hw=args.ee_hw)
        return RunSpec(
            scene=args.scene, primary=p_name, secondary=s_name, fusion=fusion, match_iou=args.match_iou,
            energy=energy, per_frame_energy=args.per_frame_energy, out=args.out, mode=args.mode,
            seed=args.seed, loc_noise_frac=args.loc_noise, false_positive_rate=args.fp_rate, workers=args.workers,
        )
    except UnknownDetector as e:
        raise InputError(f"unknown detector {e.args[0]!r}") from None
    except ValueError as e:
        raise InputError(str(e)) from None


def _load_scene(path: Path):
    try:
        return load_frames(path)
    except OSError as e:
        raise InputError(f"cannot read scene {path}: {e.strerror or e}") from None
    except SchemaError as e:
        raise InputError(f"invalid scene {path}: {e}") from None


def cmd_generate(args) -> int:
    if args.reference:
        cfg = reference_config()
    elif args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
            cfg = SceneGenConfig.from_dict(doc)
        except OSError as e:
            raise InputError(f"cannot read config {args.config}: {e.strerror or e}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"config {args.config} is not valid JSON: {e}") from None
        except (SchemaError, TypeError, ValueError) as e:
            raise InputError(f"invalid config: {e}") from None
    else:
        cfg = SceneGenConfig()
    overrides = {k: v for k, v in (("seed", args.seed), ("n_frames", args.frames)) if v is not None}
    if overrides:
        try:
            cfg = replace(cfg, **overrides)
        except SchemaError as e:
            raise InputError(f"invalid config: {e}") from None
    try:
        frames = generate_scene(cfg)
    except SchemaError as e:
        raise InputError(f"invalid config: {e}") from None
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_frames(frames, args.out)
    n_obj = sum(len(f.ground_truth) for f in frames)
    n_radar = sum(len(f.radar_points) for f in frames)
    print(f"wrote {args.out}: {len(frames)} frames, {n_obj} objects, {n_radar} radar points")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    spec = spec_from_args(args)
    frames = _load_scene(spec.scene)
    rr = run(frames, spec)
    for p in write_outputs(rr, spec.out):
        log.info("wrote %s", p)
    print(SUMMARY_HEADER)
    print(rr.summary_row())
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = spec_from_args(args)
    frames = _load_scene(spec.scene)
    try:
        rows = sweep(frames, spec, args.sweep_axis, args.values)
    except ValueError as e:
        raise InputError(str(e)) from None
    spec.out.mkdir(parents=True, exist_ok=True)
    text = sweep_csv(rows)
    (spec.out / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as e:
        print(f"radarfuse: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
