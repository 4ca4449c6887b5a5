"""Grayscale bitmaps and their on-disk form (binary PGM, P5, maxval 255)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PgmError(ValueError):
    """Raised when a PGM stream cannot be decoded."""


@dataclass(frozen=True)
class GrayBitmap:
    """Row-major 8-bit grayscale image; 0 is black ink, 255 is white."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("bitmap dimensions must be >= 1")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"pixel buffer holds {len(self.pixels)} bytes, expected {self.width * self.height}"
            )

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "GrayBitmap":
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        a = np.ascontiguousarray(arr, dtype=np.uint8)
        return cls(width=a.shape[1], height=a.shape[0], pixels=a.tobytes())


def write_pgm(bitmap: GrayBitmap, path: str | Path) -> None:
    Path(path).write_bytes(encode_pgm(bitmap))


def encode_pgm(bitmap: GrayBitmap) -> bytes:
    header = f"P5\n{bitmap.width} {bitmap.height}\n255\n".encode("ascii")
    return header + bitmap.pixels


def read_pgm(path: str | Path) -> GrayBitmap:
    return decode_pgm(Path(path).read_bytes())


def decode_pgm(data: bytes) -> GrayBitmap:
    """Decode binary PGM. Accepts `#` comment lines inside the header."""
    if not data.startswith(b"P5"):
        raise PgmError("not a binary PGM (missing P5 magic)")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise PgmError(f"bad header token {token!r}")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise PgmError(f"unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    body = data[pos : pos + width * height]
    if len(body) != width * height:
        raise PgmError("truncated pixel data")
    return GrayBitmap(width=width, height=height, pixels=bytes(body))


def salt_pepper(bitmap: GrayBitmap, rate: float, seed: int) -> GrayBitmap:
    """Flip pixels to 0 or 255 independently with the given rate; deterministic under seed."""
    if not 0.0 <= rate <= 0.2:
        raise ValueError(f"salt/pepper rate {rate} outside [0, 0.2]")
    if rate == 0.0:
        return bitmap
    rng = np.random.default_rng(seed)
    arr = bitmap.to_array().copy()
    hits = rng.random(arr.shape) < rate
    polarity = rng.integers(0, 2, size=arr.shape, dtype=np.uint8) * 255
    arr[hits] = polarity[hits]
    return GrayBitmap.from_array(arr)
