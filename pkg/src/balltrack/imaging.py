"""Raster buffers and binary PPM (P6) I/O.

All buffers are row-major with a top-left origin: ``x`` is the column,
``y`` is the row. Pixel data is held in read-only numpy arrays so a
frame can be handed to several pipeline stages without copying.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ImageError(ValueError):
    """Invalid image dimensions or data shape."""


class PpmError(ValueError):
    """Malformed, truncated or unsupported PPM data."""


class Pixel(NamedTuple):
    r: int
    g: int
    b: int

    @classmethod
    def gray(cls, v: int) -> Pixel:
        return cls(v, v, v)


BLACK = Pixel(0, 0, 0)


class PointPx(NamedTuple):
    x: int
    y: int


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _check_xy(x: int, y: int, width: int, height: int) -> None:
    if not (0 <= x < width and 0 <= y < height):
        raise IndexError(f"pixel ({x}, {y}) outside {width}x{height} image")


@dataclass(frozen=True, eq=False)
class _Raster:
    data: np.ndarray

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.data.shape, self.data.tobytes()))


class RgbImage(_Raster):
    """8-bit RGB frame, ``data`` has shape ``(height, width, 3)``."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ImageError(f"RGB data must be (h, w, 3), got {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ImageError(f"image dimensions must be >= 1, got {data.shape[1]}x{data.shape[0]}")
        object.__setattr__(self, "data", _frozen(data.astype(np.uint8, copy=False)))

    def __getitem__(self, xy: tuple[int, int]) -> Pixel:
        x, y = xy
        _check_xy(x, y, self.width, self.height)
        r, g, b = self.data[y, x]
        return Pixel(int(r), int(g), int(b))


class GrayImage(_Raster):
    """Single-channel 8-bit intensity image, ``data`` has shape ``(height, width)``."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.ndim != 2 or 0 in data.shape:
            raise ImageError(f"gray data must be a non-empty 2-D array, got {data.shape}")
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise ImageError("gray intensities must lie in [0, 255]")
            data = data.astype(np.uint8)
        object.__setattr__(self, "data", _frozen(data))

    def __getitem__(self, xy: tuple[int, int]) -> int:
        x, y = xy
        _check_xy(x, y, self.width, self.height)
        return int(self.data[y, x])

    def to_rgb(self) -> RgbImage:
        return RgbImage(np.repeat(self.data[:, :, None], 3, axis=2))


class Mask(_Raster):
    """Boolean foreground mask, ``data`` has shape ``(height, width)``."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.ndim != 2 or 0 in data.shape:
            raise ImageError(f"mask data must be a non-empty 2-D array, got {data.shape}")
        object.__setattr__(self, "data", _frozen(data.astype(bool, copy=False)))

    def __getitem__(self, xy: tuple[int, int]) -> bool:
        x, y = xy
        _check_xy(x, y, self.width, self.height)
        return bool(self.data[y, x])

    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    def to_gray(self) -> GrayImage:
        """0/255 rendering so masks can be dumped as ordinary images."""
        return GrayImage(np.where(self.data, 255, 0).astype(np.uint8))


def new_image(width: int, height: int, fill: Pixel | tuple[int, int, int] = BLACK) -> RgbImage:
    if width < 1 or height < 1:
        raise ImageError(f"image dimensions must be >= 1, got {width}x{height}")
    fill = Pixel(*fill)
    if any(not 0 <= c <= 255 for c in fill):
        raise ImageError(f"pixel channels must lie in [0, 255], got {tuple(fill)}")
    data = np.empty((height, width, 3), dtype=np.uint8)
    data[:] = fill
    return RgbImage(data)


_COMMENT = re.compile(rb"#[^\n]*\n")


def load_ppm(raw: bytes) -> RgbImage:
    """Decode a binary P6 image with maxval 255."""
    if not raw.startswith(b"P6"):
        raise PpmError("missing P6 magic number")
    # Header comments are legal PPM and skipped.
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            m = _COMMENT.match(raw, pos)
            if m is None:
                raise PpmError("unterminated header comment")
            pos = m.end()
            continue
        start = pos
        while pos < len(raw) and raw[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise PpmError("malformed header: expected width, height and maxval")
        fields.append(int(raw[start:pos]))
        if pos >= len(raw) or not raw[pos : pos + 1].isspace():
            raise PpmError("malformed header: fields must be whitespace separated")
    head_end = pos + 1  # exactly one whitespace byte before the raster
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PpmError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise PpmError(f"unsupported maxval {maxval}, only 255 is accepted")
    need = width * height * 3
    payload = raw[head_end : head_end + need]
    if len(payload) < need:
        raise PpmError(f"truncated payload: need {need} bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(data.copy())


def save_ppm(img: RgbImage | GrayImage | Mask) -> bytes:
    """Encode as canonical P6: ``P6\\n<w> <h>\\n255\\n`` followed by the raster.

    Gray images and masks are written as three equal channels.
    """
    if isinstance(img, Mask):
        img = img.to_gray()
    if isinstance(img, GrayImage):
        img = img.to_rgb()
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data.tobytes()


def read_ppm(path) -> RgbImage:
    with open(path, "rb") as fh:
        return load_ppm(fh.read())


def write_ppm(path, img: RgbImage | GrayImage | Mask) -> None:
    with open(path, "wb") as fh:
        fh.write(save_ppm(img))
