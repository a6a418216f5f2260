"""One-byte command codec and the host-to-MCU UART FIFO."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .controller import Command

_BY_BYTE = {c.byte: c for c in Command}


class UnknownCommandError(ValueError):
    def __init__(self, byte: int):
        super().__init__(f"unknown command byte 0x{byte:02X}")
        self.byte = byte


def encode(c: Command) -> int:
    return Command(c).byte


def decode(b: int) -> Command:
    try:
        return _BY_BYTE[b]
    except KeyError:
        raise UnknownCommandError(b) from None


@dataclass
class UartBuffer:
    """Bounded FIFO. A write into a full buffer drops the new byte and counts it."""

    capacity: int = 16
    fifo: deque[int] = field(default_factory=deque)
    overflow_count: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("UART capacity must be >= 1")

    def write(self, b: int) -> bool:
        if not 0 <= b <= 0xFF:
            raise ValueError(f"not a byte: {b}")
        if len(self.fifo) >= self.capacity:
            self.overflow_count += 1
            return False
        self.fifo.append(b)
        return True

    def poll(self) -> int | None:
        return self.fifo.popleft() if self.fifo else None

    def __len__(self) -> int:
        return len(self.fifo)


def uart_write(buf: UartBuffer, b: int) -> bool:
    return buf.write(b)


def uart_poll(buf: UartBuffer) -> int | None:
    return buf.poll()
