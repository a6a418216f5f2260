"""Six-command steering decision from one frame's detection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .vision import BBox, Detection, ParameterError


class Command(str, enum.Enum):
    SEARCH = "P"
    FORWARD = "F"
    STOP = "S"
    BACKWARD = "B"
    LEFT = "L"
    RIGHT = "R"

    def __str__(self) -> str:
        return self.value

    @property
    def byte(self) -> int:
        return ord(self.value)


@dataclass(frozen=True)
class ControllerParams:
    frame_center_x: int = 320
    dead_zone: int = 70
    fwd_min: int = 10
    stop_lo: int = 130
    stop_hi: int = 230

    def __post_init__(self):
        if not self.fwd_min < self.stop_lo < self.stop_hi:
            raise ParameterError("need fwd_min < stop_lo < stop_hi")
        if not 0 < self.dead_zone < self.frame_center_x:
            raise ParameterError("need 0 < dead_zone < frame_center_x")


def round_half_away(v: float) -> int:
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def decide(d: Detection | None, p: ControllerParams = ControllerParams()) -> Command:
    """Pick the motion command for this frame.

    Size bands are checked before lateral position: a ball that is too
    close backs the robot off no matter where it sits in the frame.
    """
    if d is None or d.box_size < p.fwd_min:
        return Command.SEARCH
    if d.box_size > p.stop_hi:
        return Command.BACKWARD
    if d.box_size >= p.stop_lo:
        return Command.STOP
    x = round_half_away(d.cx)
    if abs(x - p.frame_center_x) <= p.dead_zone:
        return Command.FORWARD
    if x < p.frame_center_x - p.dead_zone:
        return Command.LEFT
    return Command.RIGHT


def decide_raw(cx: float | None, box: int, p: ControllerParams = ControllerParams()) -> Command:
    """``decide`` for callers holding only a centroid x and a box size."""
    if cx is None:
        return decide(None, p)
    x = round_half_away(cx)
    half = (box - 1) // 2
    bb = BBox(x - half, x - half + box - 1, 0, box - 1)
    return decide(Detection(cx=cx, cy=0.0, radius=box / 2, box_size=box, bbox=bb), p)
