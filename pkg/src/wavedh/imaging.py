"""8-bit RGB images at the file boundary: binary PPM/PGM I/O and tensor conversion.

Only the binary netpbm variants with maxval 255 are read.  Writing always
emits the minimal header ``P6\\n{w} {h}\\n255\\n`` followed by raw bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, UnsupportedError
from .tensor import DTYPE

MAXVAL = 255
_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major interleaved RGB, one byte per sample."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8).reshape(-1)
        if self.width < 1 or self.height < 1:
            raise DimensionError(f"image must be at least 1x1, got {self.width}x{self.height}")
        if px.size != 3 * self.width * self.height:
            raise DimensionError(
                f"pixel buffer has {px.size} samples, expected 3*{self.width}*{self.height}"
            )
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, hwc: np.ndarray) -> "ImageBuffer":
        arr = np.asarray(hwc)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionError(f"expected (h, w, 3) array, got {arr.shape}")
        return cls(arr.shape[1], arr.shape[0], arr)

    def to_array(self) -> np.ndarray:
        """(h, w, 3) uint8 view."""
        return self.pixels.reshape(self.height, self.width, 3)

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(
            self.pixels, other.pixels
        )

    __hash__ = None


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _parse_header(blob: bytes, magic: bytes):
    """Return (width, height, payload offset) for a binary netpbm file."""
    if blob[:2] != magic:
        raise FormatError(f"expected {magic.decode()} netpbm file, got magic {blob[:2]!r}")
    pos, fields = 2, []
    while len(fields) < 3:
        if pos >= len(blob):
            raise FormatError("truncated netpbm header")
        ch = blob[pos:pos + 1]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == b"#":
            end = blob.find(b"\n", pos)
            pos = len(blob) if end < 0 else end + 1
        else:
            start = pos
            while pos < len(blob) and blob[pos:pos + 1] not in _WHITESPACE and blob[pos:pos + 1] != b"#":
                pos += 1
            token = blob[start:pos]
            if not token.isdigit():
                raise FormatError(f"bad netpbm header field {token!r}")
            fields.append(int(token))
    if pos >= len(blob) or blob[pos:pos + 1] not in _WHITESPACE:
        raise FormatError("netpbm header must end with a single whitespace byte")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"bad image size {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise FormatError(f"maxval {maxval} out of range")
    if maxval != MAXVAL:
        raise UnsupportedError(f"only maxval {MAXVAL} is supported, got {maxval}")
    return width, height, pos + 1


def _payload(blob, offset, count):
    data = blob[offset:]
    if len(data) < count:
        raise FormatError(f"pixel data truncated: need {count} bytes, have {len(data)}")
    if len(data) > count:
        raise FormatError(f"{len(data) - count} trailing bytes after pixel data")
    return np.frombuffer(data, dtype=np.uint8)


def decode_ppm(blob: bytes) -> ImageBuffer:
    w, h, off = _parse_header(blob, b"P6")
    return ImageBuffer(w, h, _payload(blob, off, 3 * w * h))


def encode_ppm(image: ImageBuffer) -> bytes:
    return f"P6\n{image.width} {image.height}\n{MAXVAL}\n".encode("ascii") + image.pixels.tobytes()


def read_ppm(source) -> ImageBuffer:
    return decode_ppm(_read_bytes(source))


def write_ppm(image: ImageBuffer, destination) -> None:
    blob = encode_ppm(image)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "wb") as fh:
            fh.write(blob)
    else:
        destination.write(blob)


def read_pgm(source) -> np.ndarray:
    """Binary greyscale (P5, maxval 255) as an (h, w) uint8 array."""
    blob = _read_bytes(source)
    w, h, off = _parse_header(blob, b"P5")
    return _payload(blob, off, w * h).reshape(h, w)


def encode_pgm(gray: np.ndarray) -> bytes:
    g = np.asarray(gray)
    if g.ndim != 2:
        raise DimensionError(f"expected (h, w) array, got {g.shape}")
    g = np.ascontiguousarray(g, dtype=np.uint8)
    return f"P5\n{g.shape[1]} {g.shape[0]}\n{MAXVAL}\n".encode("ascii") + g.tobytes()


def to_tensor(image: ImageBuffer, dtype=DTYPE) -> np.ndarray:
    """(1, 3, h, w) array in [0, 1] via v / 255 (float32 unless ``dtype`` says otherwise)."""
    chw = image.to_array().transpose(2, 0, 1).astype(dtype) / np.array(MAXVAL, dtype=dtype)
    return np.ascontiguousarray(chw[None])


def quantize(x: np.ndarray) -> np.ndarray:
    """round(clamp(v, 0, 1) * 255) with ties rounded up, as uint8."""
    v = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * MAXVAL + 0.5).astype(np.uint8)


def from_tensor(x: np.ndarray) -> ImageBuffer:
    """Inverse of :func:`to_tensor` for a (3, h, w) or (1, 3, h, w) tensor."""
    t = np.asarray(x)
    if t.ndim == 4:
        if t.shape[0] != 1:
            raise DimensionError(f"expected a single image, got batch of {t.shape[0]}")
        t = t[0]
    if t.ndim != 3 or t.shape[0] != 3:
        raise DimensionError(f"expected (3, h, w) tensor, got {np.shape(x)}")
    if not np.all(np.isfinite(t)):
        raise FormatError("cannot export an image containing NaN or Inf")
    return ImageBuffer.from_array(quantize(t).transpose(1, 2, 0))
