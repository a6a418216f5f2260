"""Behavioral model of the robot's PIC firmware loop.

Boot sets up ports and the UART, blinks the two status LEDs, then the main
loop drains the UART and dispatches each byte to a motor command.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .controller import Command
from .protocol import UartBuffer, UnknownCommandError, decode


class McuStateError(RuntimeError):
    pass


class Phase(str, enum.Enum):
    UNINITIALIZED = "uninitialized"
    BLINKING = "blinking"
    RUNNING = "running"


@dataclass(frozen=True)
class LedBlink:
    def __str__(self) -> str:
        return "LedBlink"


@dataclass(frozen=True)
class CommandAccepted:
    byte: int

    def __str__(self) -> str:
        return f"CommandAccepted(0x{self.byte:02X})"


@dataclass(frozen=True)
class UnknownByte:
    byte: int

    def __str__(self) -> str:
        return f"UnknownByte(0x{self.byte:02X})"


Event = LedBlink | CommandAccepted | UnknownByte


@dataclass
class McuState:
    phase: Phase = Phase.UNINITIALIZED
    active_command: Command = Command.STOP
    event_log: list[Event] = field(default_factory=list)


def mcu_init(state: McuState) -> McuState:
    if state.phase is not Phase.UNINITIALIZED:
        raise McuStateError(f"MCU already initialized (phase={state.phase.value})")
    state.phase = Phase.BLINKING
    state.event_log.extend((LedBlink(), LedBlink()))
    state.active_command = Command.STOP
    state.phase = Phase.RUNNING
    return state


def mcu_tick(state: McuState, uart: UartBuffer) -> McuState:
    """Drain every pending byte; the last valid one becomes the active command."""
    if state.phase is not Phase.RUNNING:
        raise McuStateError("mcu_tick before mcu_init")
    while (b := uart.poll()) is not None:
        try:
            cmd = decode(b)
        except UnknownCommandError:
            state.event_log.append(UnknownByte(b))
            continue
        state.active_command = cmd
        state.event_log.append(CommandAccepted(b))
    return state
