"""Software re-creation of a webcam-guided ball-following robot.

The detector, the six-command controller, the serial link, the
microcontroller and stepper models, and a synthetic camera world that
closes the loop.
"""

__version__ = "0.1.0"

from .actuation import DriveParams, RobotPose, StepperDriver, command_to_wheels, update_pose
from .controller import Command, ControllerParams, decide
from .imaging import GrayImage, Mask, Pixel, RgbImage, load_ppm, new_image, save_ppm
from .mcu import McuState, mcu_init, mcu_tick
from .protocol import UartBuffer, decode, encode
from .vision import Detection, PipelineConfig, detect_ball
from .world import Scenario, load_scenario, parse_scenario, render_frame, run_closed_loop, simulate

__all__ = [
    "Command",
    "ControllerParams",
    "Detection",
    "DriveParams",
    "GrayImage",
    "Mask",
    "McuState",
    "PipelineConfig",
    "Pixel",
    "RgbImage",
    "RobotPose",
    "Scenario",
    "StepperDriver",
    "UartBuffer",
    "command_to_wheels",
    "decide",
    "decode",
    "detect_ball",
    "encode",
    "load_ppm",
    "load_scenario",
    "mcu_init",
    "mcu_tick",
    "new_image",
    "parse_scenario",
    "render_frame",
    "run_closed_loop",
    "save_ppm",
    "simulate",
    "update_pose",
]
