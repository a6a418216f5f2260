"""Command-line front end: ``pipeline``, ``decide``, ``simulate``, ``render``.

Exit codes: 0 success, 2 input error, 3 clean no-detection, 4 non-convergence.
Every config key is also a flag (``--hyst_low 60`` or ``--hyst-low 60``);
flags override the config/scenario file, which overrides the defaults.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULTS, KEY_GROUP, ConfigError, Params, load_config_text, show_config
from .controller import decide_raw
from .imaging import Mask, PpmError, RgbImage, read_ppm, write_ppm
from .vision import PipelineResult, run_pipeline
from .world import SCENARIO_KEYS, ScenarioError, format_trace, load_scenario, render_frame, simulate

EXIT_OK, EXIT_INPUT, EXIT_NO_DETECTION, EXIT_NO_CONVERGE = 0, 2, 3, 4


class InputError(Exception):
    pass


def _add_key_flags(p: argparse.ArgumentParser, keys) -> None:
    g = p.add_argument_group("config overrides")
    for key in keys:
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        g.add_argument(*names, dest=f"ov_{key}", metavar="VALUE", default=None)


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    return {k[3:]: v for k, v in vars(args).items() if k.startswith("ov_") and v is not None}


def _params(args: argparse.Namespace) -> Params:
    params = DEFAULTS
    if getattr(args, "config", None):
        try:
            params = load_config_text(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None
        except ConfigError as exc:
            raise InputError(f"{args.config}: {exc}") from None
    try:
        return params.with_overrides(_overrides(args))
    except ConfigError as exc:
        raise InputError(str(exc)) from None


# --------------------------------------------------------------------------
# pipeline

_PALETTE = np.array(
    [(0, 255, 0), (255, 0, 255), (0, 255, 255), (255, 255, 0), (255, 128, 0), (128, 128, 255)],
    dtype=np.uint8,
)


def cluster_view(res: PipelineResult) -> RgbImage:
    """Kept clusters in palette colours; the accepted one outlined in red."""
    h, w = res.mask.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    for i, c in enumerate(res.clusters):
        img[c.points[:, 1], c.points[:, 0]] = _PALETTE[i % len(_PALETTE)]
    d = res.detection
    if d is not None:
        bb = d.bbox
        img[bb.min_y, bb.min_x : bb.max_x + 1] = (255, 0, 0)
        img[bb.max_y, bb.min_x : bb.max_x + 1] = (255, 0, 0)
        img[bb.min_y : bb.max_y + 1, bb.min_x] = (255, 0, 0)
        img[bb.min_y : bb.max_y + 1, bb.max_x] = (255, 0, 0)
    return RgbImage(img)


def detection_record(res: PipelineResult) -> str:
    d = res.detection
    if d is None:
        vals = {"detected": "false", "cx": "", "cy": "", "radius": "", "box": "", "circularity": ""}
    else:
        vals = {
            "detected": "true",
            "cx": f"{d.cx:.6f}",
            "cy": f"{d.cy:.6f}",
            "radius": f"{d.radius:.6f}",
            "box": str(d.box_size),
            "circularity": f"{d.circularity:.6f}",
        }
    return "".join(f"{k}={v}\n" for k, v in vals.items())


def cmd_pipeline(args: argparse.Namespace) -> int:
    params = _params(args)
    try:
        frame = read_ppm(args.image)
    except OSError as exc:
        raise InputError(f"cannot read {args.image}: {exc.strerror}") from None
    except PpmError as exc:
        raise InputError(f"{args.image}: {exc}") from None
    res = run_pipeline(frame, params.pipeline)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kept = np.zeros(res.mask.shape, dtype=bool)
    for c in res.clusters:
        kept[c.points[:, 1], c.points[:, 0]] = True

    write_ppm(out / "01_green.ppm", res.green)
    write_ppm(out / "02_mean.ppm", res.smoothed)
    write_ppm(out / "03_hysteresis.ppm", res.mask)
    write_ppm(out / "04_points.ppm", Mask(kept))
    write_ppm(out / "05_clusters.ppm", cluster_view(res))
    record = detection_record(res)
    (out / "detection.txt").write_text(record, encoding="utf-8")
    sys.stdout.write(record)
    return EXIT_OK if res.detection is not None else EXIT_NO_DETECTION


# --------------------------------------------------------------------------
# decide


def cmd_decide(args: argparse.Namespace) -> int:
    params = _params(args)
    try:
        cx = None if args.cx.lower() == "none" else float(args.cx)
        box = int(args.box)
    except ValueError:
        raise InputError(f"expected numeric cx (or 'none') and integer box, got {args.cx!r} {args.box!r}") from None
    print(decide_raw(cx, box, params.controller).value)
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate / render


def _scenario(args: argparse.Namespace):
    try:
        return load_scenario(args.scenario, _overrides(args))
    except OSError as exc:
        raise InputError(f"cannot read {args.scenario}: {exc.strerror}") from None
    except ScenarioError as exc:
        raise InputError(f"{args.scenario}: {exc}") from None


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hook = None
    if args.dump_frames:
        def hook(tick, frame):
            write_ppm(out / f"frame_{tick:06d}.ppm", frame)
    result = simulate(scenario, on_frame=hook)
    (out / "trace.csv").write_text(format_trace(scenario, result.rows), encoding="utf-8")
    p = result.final_pose
    print(f"final_pose x={p.x:.6f} y={p.y:.6f} theta={p.theta:.6f}")
    final = result.final_command.value if result.final_command else "none"
    print(f"final_command {final}")
    if scenario.expect == "converge" and not result.ever_stopped:
        print("did not converge: no S command within max_ticks", file=sys.stderr)
        return EXIT_NO_CONVERGE
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    frame = render_frame(scenario, scenario.robot_start, scenario.ball_at(0.0), 0)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_ppm(out, frame)
    print(out)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="balltrack", description="Vision-guided ball-following robot, in software.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--show-config", action="store_true", help="print the defaults table and exit")
    sub = parser.add_subparsers(dest="command")

    pipe_keys = [k for k, g in KEY_GROUP.items() if g == "pipeline"]
    ctl_keys = [k for k, g in KEY_GROUP.items() if g == "controller"]
    scen_keys = list(SCENARIO_KEYS) + list(KEY_GROUP)

    p = sub.add_parser("pipeline", help="run the detector on one PPM frame and dump every stage")
    p.add_argument("image")
    p.add_argument("--out", default="pipeline_out")
    p.add_argument("--config", help="key = value config file")
    _add_key_flags(p, pipe_keys)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("decide", help="print the command for a centroid x and box size")
    p.add_argument("cx", help="centroid x in pixels, or 'none'")
    p.add_argument("box", help="bounding box size in pixels")
    p.add_argument("--config", help="key = value config file")
    _add_key_flags(p, ctl_keys)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("simulate", help="run a closed-loop scenario and write trace.csv")
    p.add_argument("scenario")
    p.add_argument("--out", default="sim_out")
    p.add_argument("--dump-frames", action="store_true")
    _add_key_flags(p, scen_keys)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("render", help="render a scenario's first frame")
    p.add_argument("scenario")
    p.add_argument("--out", default="frame_000000.ppm")
    _add_key_flags(p, scen_keys)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.show_config:
        sys.stdout.write(show_config())
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"balltrack {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
