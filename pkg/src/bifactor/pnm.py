"""Minimal reader/writer for portable graymap and pixmap files (P2, P3, P5, P6)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MAGICS = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}
_WS = b" \t\r\n\v\f"


class PnmError(ValueError):
    """Malformed or unsupported image file."""


@dataclass(frozen=True)
class PortableImage:
    """8-bit image. ``pixels`` has shape ``(channels, height, width)``."""

    pixels: np.ndarray
    maxval: int = 255

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[0] not in (1, 3) or p.shape[1] < 1 or p.shape[2] < 1:
            raise PnmError(f"pixels must have shape (1 or 3, height, width), got {p.shape}")
        if self.maxval != 255:
            raise PnmError(f"maxval must be 255, got {self.maxval}")
        if p.size and (p.min() < 0 or p.max() > self.maxval):
            raise PnmError("pixel values outside [0, 255]")

    @property
    def channels(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def from_float(cls, channels: np.ndarray) -> "PortableImage":
        """Round and clip float data of shape ``(c, h, w)`` or ``(h, w)``."""
        a = np.asarray(channels, dtype=np.float64)
        if a.ndim == 2:
            a = a[None]
        return cls(np.clip(np.rint(a), 0, 255).astype(np.uint8))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos]
            if c == ord("#"):
                nl = d.find(b"\n", self.pos)
                self.pos = len(d) if nl < 0 else nl + 1
            elif c in _WS:
                self.pos += 1
            else:
                break

    def token(self, what: str) -> int:
        self._skip()
        start = self.pos
        d = self.data
        while self.pos < len(d) and d[self.pos] not in _WS and d[self.pos] != ord("#"):
            self.pos += 1
        tok = d[start:self.pos]
        if not tok:
            raise PnmError(f"truncated data: expected {what} at byte offset {start}")
        if not tok.isdigit():
            raise PnmError(f"invalid {what} {tok[:16]!r} at byte offset {start}")
        return int(tok)


def read_pnm(path) -> PortableImage:
    """Read a P2, P3, P5 or P6 file with ``maxval`` 255."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in _MAGICS:
        raise PnmError(f"unsupported magic {magic!r} at byte offset 0")
    channels, binary = _MAGICS[magic]
    r = _Reader(data)
    r.pos = 2
    width = r.token("width")
    height = r.token("height")
    maxval_off = r.pos
    maxval = r.token("maxval")
    if width < 1 or height < 1:
        raise PnmError(f"dimensions must be positive, got {width}x{height}")
    if maxval != 255:
        raise PnmError(f"maxval {maxval} at byte offset {maxval_off} is not 255")
    count = width * height * channels
    if binary:
        if r.pos >= len(data) or data[r.pos] not in _WS:
            raise PnmError(f"missing whitespace after header at byte offset {r.pos}")
        start = r.pos + 1
        raw = data[start:start + count]
        if len(raw) < count:
            raise PnmError(f"truncated data: need {count} bytes from byte offset {start}, "
                           f"found {len(raw)}")
        flat = np.frombuffer(raw, dtype=np.uint8).copy()
    else:
        flat = np.empty(count, dtype=np.int64)
        for i in range(count):
            off = r.pos
            v = r.token("pixel")
            if v > maxval:
                raise PnmError(f"pixel value {v} exceeds maxval at byte offset {off}")
            flat[i] = v
        flat = flat.astype(np.uint8)
    pixels = flat.reshape(height, width, channels).transpose(2, 0, 1)
    return PortableImage(np.ascontiguousarray(pixels))


def write_pnm(path, image: PortableImage, binary: bool = True) -> None:
    """Write ``image``; binary (P5/P6) by default, plain (P2/P3) otherwise."""
    c = image.channels
    magic = {(1, True): "P5", (3, True): "P6", (1, False): "P2", (3, False): "P3"}[(c, binary)]
    header = f"{magic}\n{image.width} {image.height}\n255\n".encode()
    inter = image.pixels.transpose(1, 2, 0).astype(np.uint8)
    if binary:
        body = inter.tobytes()
    else:
        rows = [" ".join(str(int(v)) for v in row.ravel()) for row in inter]
        body = ("\n".join(rows) + "\n").encode()
    Path(path).write_bytes(header + body)
