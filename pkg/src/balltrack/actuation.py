"""Stepper drivers and differential-drive kinematics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .controller import Command
from .vision import ParameterError

# Two-phase full-step drive: two coils energized at every step.
TWO_PHASE_SEQUENCE = ("AB", "BC", "CD", "DA")
FORWARD, REVERSE = 1, -1


@dataclass
class StepperDriver:
    phase_index: int = 0
    direction: int = FORWARD
    mode: str = "two-phase"

    def step(self) -> StepperDriver:
        self.phase_index = (self.phase_index + self.direction) % 4
        return self

    @property
    def coils(self) -> str:
        return TWO_PHASE_SEQUENCE[self.phase_index]


def step(driver: StepperDriver) -> StepperDriver:
    return driver.step()


@dataclass(frozen=True)
class DriveParams:
    step_rate: float = 400.0
    steps_per_rev: int = 200
    wheel_radius: float = 0.04
    wheel_base: float = 0.25
    tick: float = 0.01

    def __post_init__(self):
        for name in ("step_rate", "steps_per_rev", "wheel_radius", "wheel_base", "tick"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")


@dataclass(frozen=True)
class RobotPose:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0


def normalize_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.remainder(a, math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


def command_to_wheels(c: Command, p: DriveParams = DriveParams()) -> tuple[float, float]:
    """Signed (left, right) step rates for a command.

    Turning and searching are in-place spins; search runs at half rate.
    """
    f = p.step_rate
    return {
        Command.FORWARD: (f, f),
        Command.BACKWARD: (-f, -f),
        Command.STOP: (0.0, 0.0),
        Command.LEFT: (-f, f),
        Command.RIGHT: (f, -f),
        Command.SEARCH: (-f / 2, f / 2),
    }[Command(c)]


def _exact(v: float) -> Fraction:
    # shortest repr keeps 0.01 as 1/100 rather than its binary approximation
    return Fraction(repr(float(v)))


@dataclass
class StepAccumulator:
    """Turns a signed step rate into whole steps per tick without drift."""

    tick: float
    _acc: Fraction = field(default=Fraction(0), repr=False)

    def advance(self, rate: float) -> int:
        self._acc += _exact(rate) * _exact(self.tick)
        n = math.trunc(self._acc)
        self._acc -= n
        return n

    @property
    def residual(self) -> Fraction:
        return self._acc


def wheel_arc(steps: float, p: DriveParams) -> float:
    return 2 * math.pi * p.wheel_radius * (steps / p.steps_per_rev)


def update_pose(pose: RobotPose, dL: float, dR: float, p: DriveParams = DriveParams()) -> RobotPose:
    """Closed-form arc update for one tick of wheel motion."""
    sL = wheel_arc(dL, p)
    sR = wheel_arc(dR, p)
    v = (sL + sR) / 2
    w = (sR - sL) / p.wheel_base
    th = pose.theta
    if w == 0:
        return RobotPose(pose.x + v * math.cos(th), pose.y + v * math.sin(th), th)
    k = v / w
    return RobotPose(
        pose.x + k * (math.sin(th + w) - math.sin(th)),
        pose.y + k * (math.cos(th) - math.cos(th + w)),
        normalize_angle(th + w),
    )
