"""Synthetic camera world that closes the sense-decide-act loop.

Per tick: move the ball, render the camera frame from the robot pose,
detect, decide, send the command byte over the UART, let the MCU model
pick it up, convert the active command into wheel steps and integrate
the pose.

World frame: x forward at theta=0, y to the left, theta counterclockwise.
The camera sits at the robot origin looking along the heading.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .actuation import (
    FORWARD,
    REVERSE,
    RobotPose,
    StepAccumulator,
    StepperDriver,
    command_to_wheels,
    update_pose,
)
from .config import DEFAULTS, KEY_GROUP, CameraModel, ConfigError, Params, apply_kv, parse_kv_lines
from .controller import Command, decide
from .imaging import Pixel, RgbImage
from .mcu import McuState, mcu_init, mcu_tick
from .protocol import UartBuffer, encode
from .vision import Detection, detect_ball

RNG_NAME = "numpy-PCG64/SeedSequence(seed,tick)"
MAX_NOISE = 0.05

TRACE_COLUMNS = (
    "tick", "t", "x", "y", "theta", "detected", "cx", "cy", "box",
    "command", "left_steps", "right_steps",
)


class ScenarioError(ConfigError):
    pass


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float


@dataclass(frozen=True)
class Scenario:
    robot_start: RobotPose = RobotPose()
    ball_path: tuple[Waypoint, ...] = ()
    background: int = 64
    ball_color: Pixel = Pixel(0, 200, 0)
    noise_density: float = 0.0
    lighting_scale: float = 1.0
    seed: int = 0
    max_ticks: int = 3000
    expect: str | None = None
    params: Params = DEFAULTS

    def __post_init__(self):
        ts = [w.t for w in self.ball_path]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ScenarioError("ball_path timestamps must be strictly increasing")
        if not 0 <= self.noise_density <= MAX_NOISE:
            raise ScenarioError(f"noise_density must lie in [0, {MAX_NOISE}]")
        if not 0 <= self.background <= 255:
            raise ScenarioError("background must lie in [0, 255]")
        if any(not 0 <= c <= 255 for c in self.ball_color):
            raise ScenarioError("ball_color channels must lie in [0, 255]")
        if self.lighting_scale < 0:
            raise ScenarioError("lighting_scale must be >= 0")
        if self.max_ticks < 0:
            raise ScenarioError("max_ticks must be >= 0")
        if self.expect not in (None, "converge"):
            raise ScenarioError(f"unknown expect value {self.expect!r}")

    @property
    def camera(self) -> CameraModel:
        return self.params.camera

    def ball_at(self, t: float) -> tuple[float, float] | None:
        """Ball position at time ``t``; piecewise linear, held at the ends."""
        path = self.ball_path
        if not path:
            return None
        if t <= path[0].t:
            return path[0].x, path[0].y
        for a, b in zip(path, path[1:]):
            if t <= b.t:
                u = (t - a.t) / (b.t - a.t)
                return a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)
        return path[-1].x, path[-1].y


# --------------------------------------------------------------------------
# scenario files


def _floats(text: str, n: int, key: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ScenarioError(f"{key}: expected {n} comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ScenarioError(f"{key}: not a number in {text!r}") from None


def _parse_scenario_value(key: str, value: str):
    if key == "robot_start":
        return RobotPose(*_floats(value, 3, key))
    if key == "ball_path":
        if value.lower() in ("", "none"):
            return ()
        return tuple(
            Waypoint(*_floats(item, 3, key)) for item in value.split(";") if item.strip()
        )
    if key == "ball_color":
        r, g, b = _floats(value, 3, key)
        if any(c != int(c) for c in (r, g, b)):
            raise ScenarioError("ball_color channels must be integers")
        return Pixel(int(r), int(g), int(b))
    if key in ("background", "seed", "max_ticks"):
        try:
            return int(value)
        except ValueError:
            raise ScenarioError(f"{key}: expected integer, got {value!r}") from None
    if key in ("noise_density", "lighting_scale"):
        try:
            return float(value)
        except ValueError:
            raise ScenarioError(f"{key}: expected number, got {value!r}") from None
    if key == "expect":
        return value or None
    raise AssertionError(key)


SCENARIO_KEYS = (
    "robot_start", "ball_path", "background", "ball_color", "noise_density",
    "lighting_scale", "seed", "max_ticks", "expect",
)


def parse_scenario(text: str, overrides: dict[str, str] | None = None) -> Scenario:
    """Parse a ``key = value`` scenario file.

    ``overrides`` (e.g. from CLI flags) win over values in the file.
    Errors carry the 1-based line number of the offending entry.
    """
    try:
        entries = parse_kv_lines(text)
    except ConfigError as exc:
        raise ScenarioError(str(exc).split(": ", 1)[-1], exc.line) from None
    seen: dict[str, int] = {}
    for lineno, key, _ in entries:
        if key in seen:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        if key not in SCENARIO_KEYS and key not in KEY_GROUP:
            raise ScenarioError(f"unknown key {key!r}", lineno)
        seen[key] = lineno
    if overrides:
        for key in overrides:
            if key not in SCENARIO_KEYS and key not in KEY_GROUP:
                raise ScenarioError(f"unknown key {key!r}")
        merged = [(ln, k, v) for ln, k, v in entries if k not in overrides]
        merged += [(0, k, str(v)) for k, v in overrides.items()]
        entries = merged

    fields_: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, key, value in entries:
        if key in SCENARIO_KEYS:
            try:
                fields_[key] = _parse_scenario_value(key, value)
            except ScenarioError as exc:
                raise ScenarioError(str(exc), lineno or None) from None
            lines[key] = lineno
    try:
        params = apply_kv([e for e in entries if e[1] in KEY_GROUP])
    except ConfigError as exc:
        raise ScenarioError(str(exc).split(": ", 1)[-1] if exc.line else str(exc), exc.line or None) from None

    # validate field by field so the error points at a line
    probe = Scenario(params=params)
    for key, value in fields_.items():
        try:
            probe = replace(probe, **{key: value})
        except ScenarioError as exc:
            raise ScenarioError(str(exc), lines[key] or None) from None
    return probe


def load_scenario(path, overrides: dict[str, str] | None = None) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), overrides)


# --------------------------------------------------------------------------
# camera


def _lit(v: float, scale: float) -> int:
    return max(0, min(255, math.floor(v * scale + 0.5)))


def project_ball(pose: RobotPose, ball: tuple[float, float], cam: CameraModel) -> tuple[float, float, float] | None:
    """Image (u, v, radius) of the ball, or ``None`` when it is not in front of the camera."""
    dx = ball[0] - pose.x
    dy = ball[1] - pose.y
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    depth = dx * c + dy * s
    if depth <= 0:
        return None
    right = dx * s - dy * c  # lateral offset, positive to the right of the heading
    u = cam.frame_w / 2 + cam.focal_px * right / depth
    ball_height = cam.cam_height  # ball centre is held at camera height
    v = cam.frame_h / 2 + cam.focal_px * (cam.cam_height - ball_height) / depth
    rad = cam.focal_px * cam.ball_radius_m / depth
    return u, v, rad


def draw_disk(data: np.ndarray, u: float, v: float, rad: float, color) -> None:
    """Fill pixels whose centre lies within ``rad`` of (u, v), clipped to the frame."""
    H, W = data.shape[:2]
    y0 = max(0, math.ceil(v - rad))
    y1 = min(H - 1, math.floor(v + rad))
    x0 = max(0, math.ceil(u - rad))
    x1 = min(W - 1, math.floor(u + rad))
    if y0 > y1 or x0 > x1:
        return
    ys = np.arange(y0, y1 + 1)[:, None]
    xs = np.arange(x0, x1 + 1)[None, :]
    # tolerance keeps radii like 19.8/0.3046... == 65 from losing the axis pixels to rounding
    inside = (xs - u) ** 2 + (ys - v) ** 2 <= rad * rad + 1e-9
    data[y0 : y1 + 1, x0 : x1 + 1][inside] = color


def noise_rng(seed: int, tick: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, tick])))


def render_frame(
    scenario: Scenario,
    pose: RobotPose,
    ball: tuple[float, float] | None,
    tick: int = 0,
) -> RgbImage:
    cam = scenario.camera
    scale = scenario.lighting_scale
    bg = _lit(scenario.background, scale)
    data = np.full((cam.frame_h, cam.frame_w, 3), bg, dtype=np.uint8)
    if ball is not None:
        proj = project_ball(pose, ball, cam)
        if proj is not None:
            color = tuple(_lit(c, scale) for c in scenario.ball_color)
            draw_disk(data, *proj, color)
    if scenario.noise_density > 0:
        n = round(scenario.noise_density * cam.frame_w * cam.frame_h)
        idx = noise_rng(scenario.seed, tick).choice(cam.frame_w * cam.frame_h, size=n, replace=False)
        data.reshape(-1, 3)[idx] = scenario.ball_color
    return RgbImage(data)


# --------------------------------------------------------------------------
# closed loop


@dataclass(frozen=True)
class TraceRow:
    tick: int
    t: float
    pose: RobotPose
    detection: Detection | None
    command: Command
    left_steps: int
    right_steps: int

    @property
    def detected(self) -> bool:
        return self.detection is not None

    def csv_fields(self) -> list[str]:
        d = self.detection
        return [
            str(self.tick),
            f"{self.t:.6f}",
            f"{self.pose.x:.6f}",
            f"{self.pose.y:.6f}",
            f"{self.pose.theta:.6f}",
            "1" if d else "0",
            f"{d.cx:.6f}" if d else "",
            f"{d.cy:.6f}" if d else "",
            str(d.box_size) if d else "",
            self.command.value,
            str(self.left_steps),
            str(self.right_steps),
        ]


@dataclass
class SimulationResult:
    rows: list[TraceRow]
    final_pose: RobotPose
    mcu: McuState
    uart: UartBuffer
    drivers: tuple[StepperDriver, StepperDriver] = field(default_factory=lambda: (StepperDriver(), StepperDriver()))

    @property
    def final_command(self) -> Command | None:
        return self.rows[-1].command if self.rows else None

    @property
    def ever_stopped(self) -> bool:
        return any(r.command is Command.STOP for r in self.rows)


def _drive(driver: StepperDriver, steps: int) -> None:
    driver.direction = FORWARD if steps >= 0 else REVERSE
    for _ in range(abs(steps)):
        driver.step()


FrameHook = Callable[[int, RgbImage], None]


def simulate(scenario: Scenario, on_frame: FrameHook | None = None) -> SimulationResult:
    p = scenario.params
    drive = p.drive
    uart = UartBuffer()
    mcu = mcu_init(McuState())
    acc_l, acc_r = StepAccumulator(drive.tick), StepAccumulator(drive.tick)
    drivers = (StepperDriver(), StepperDriver())
    pose = scenario.robot_start
    rows: list[TraceRow] = []
    # Without noise the frame depends only on (pose, ball); reuse detections for repeated views.
    cache: dict[tuple, Detection | None] = {}

    for tick in range(scenario.max_ticks):
        t = tick * drive.tick
        ball = scenario.ball_at(t)
        key = (pose, ball)
        if on_frame is None and scenario.noise_density == 0 and key in cache:
            det = cache[key]
        else:
            frame = render_frame(scenario, pose, ball, tick)
            if on_frame is not None:
                on_frame(tick, frame)
            det = detect_ball(frame, p.pipeline)
            if scenario.noise_density == 0:
                cache[key] = det
        cmd = decide(det, p.controller)
        uart.write(encode(cmd))
        mcu_tick(mcu, uart)
        rate_l, rate_r = command_to_wheels(mcu.active_command, drive)
        dl, dr = acc_l.advance(rate_l), acc_r.advance(rate_r)
        _drive(drivers[0], dl)
        _drive(drivers[1], dr)
        rows.append(TraceRow(tick, t, pose, det, cmd, dl, dr))
        pose = update_pose(pose, dl, dr, drive)

    return SimulationResult(rows, pose, mcu, uart, drivers)


def run_closed_loop(scenario: Scenario) -> list[TraceRow]:
    return simulate(scenario).rows


def trace_header(scenario: Scenario) -> list[str]:
    return [
        f"# rng={RNG_NAME} seed={scenario.seed}",
        f"# max_ticks={scenario.max_ticks} tick={scenario.params.drive.tick!r}",
    ]


def format_trace(scenario: Scenario, rows: Iterable[TraceRow]) -> str:
    buf = io.StringIO()
    for line in trace_header(scenario):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def read_trace(text: str) -> list[dict[str, str]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
