"""Raster containers, binary raster I/O and the seeded RNG.

File layout (little-endian)::

    magic   4 bytes   b"CSRR"
    kind    u8        0 = scalar, 1 = complex, 2 = mask
    rows    u32
    cols    u32
    payload           f32 (scalar), f32 re/im pairs (complex), u8 (mask)

Payload is row-major. Scalar and complex images are held as float64 /
complex128 in memory and narrowed to 32 bits on write, so a round trip is
bit-exact for any image that was itself read from disk (or whose values are
representable in float32).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

MAGIC = b"CSRR"
_HEADER = struct.Struct("<4sBII")
KIND_SCALAR, KIND_COMPLEX, KIND_MASK = 0, 1, 2
_KIND_NAMES = {"scalar": KIND_SCALAR, "complex": KIND_COMPLEX, "mask": KIND_MASK}
_PAYLOAD_DTYPE = {KIND_SCALAR: np.dtype("<f4"), KIND_COMPLEX: np.dtype("<c8"), KIND_MASK: np.dtype("u1")}


class RasterFormatError(ValueError):
    """Malformed header."""


class RasterTruncationError(RasterFormatError):
    """Payload size does not match the declared shape."""


class RasterDataError(ValueError):
    """Values violate the image invariants (non-finite, out of range)."""


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise RasterDataError(f"expected a non-empty 2-D array, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ScalarImage:
    """Real-valued raster. ``coherence=True`` additionally enforces 0 <= v <= 1."""

    data: np.ndarray
    coherence: bool = False

    def __post_init__(self):
        data = _frozen(self.data, np.float64)
        if not np.all(np.isfinite(data)):
            raise RasterDataError("scalar image contains non-finite values")
        if self.coherence and (data.min() < 0.0 or data.max() > 1.0):
            raise RasterDataError("coherence image has values outside [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class ComplexImage:
    """Single-look complex raster."""

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.complex128)
        if not np.all(np.isfinite(data)):
            raise RasterDataError("complex image contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Land (1) / water (0) labels."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.dtype == bool:
            raw = raw.astype(np.uint8)
        if raw.size and not np.all((raw == 0) | (raw == 1)):
            raise RasterDataError("mask values must be 0 or 1")
        object.__setattr__(self, "data", _frozen(raw, np.uint8))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class RasterMeta:
    pixel_spacing_m: float = 1.0

    def __post_init__(self):
        if not self.pixel_spacing_m > 0:
            raise ValueError("pixel_spacing_m must be positive")


Image = Union[ScalarImage, ComplexImage, BinaryMask]


def _kind_of(img: Image) -> int:
    if isinstance(img, ScalarImage):
        return KIND_SCALAR
    if isinstance(img, ComplexImage):
        return KIND_COMPLEX
    if isinstance(img, BinaryMask):
        return KIND_MASK
    raise TypeError(f"not a raster image: {type(img).__name__}")


def to_bytes(img: Image) -> bytes:
    kind = _kind_of(img)
    payload = np.ascontiguousarray(img.data, dtype=_PAYLOAD_DTYPE[kind])
    if kind != KIND_MASK and not np.all(np.isfinite(payload)):
        raise RasterDataError("values overflow float32")
    return _HEADER.pack(MAGIC, kind, img.rows, img.cols) + payload.tobytes()


def from_bytes(buf: bytes, kind: str | None = None) -> Image:
    if len(buf) < _HEADER.size:
        raise RasterFormatError("file shorter than raster header")
    magic, code, rows, cols = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise RasterFormatError(f"bad magic {magic!r}")
    if code not in _PAYLOAD_DTYPE:
        raise RasterFormatError(f"unknown kind tag {code}")
    if rows < 1 or cols < 1:
        raise RasterFormatError(f"invalid shape {rows}x{cols}")
    if kind is not None and _KIND_NAMES[kind] != code:
        raise RasterFormatError(f"file holds kind {code}, expected {kind}")
    dtype = _PAYLOAD_DTYPE[code]
    expected = rows * cols * dtype.itemsize
    if len(buf) - _HEADER.size != expected:
        raise RasterTruncationError(
            f"payload is {len(buf) - _HEADER.size} bytes, header implies {expected}"
        )
    data = np.frombuffer(buf, dtype=dtype, offset=_HEADER.size).reshape(rows, cols)
    if code == KIND_SCALAR:
        return ScalarImage(data)
    if code == KIND_COMPLEX:
        return ComplexImage(data)
    return BinaryMask(data)


def read_raster(path, kind: str | None = None) -> Image:
    """Read a raster file; ``kind`` ('scalar', 'complex', 'mask') is checked when given."""
    if kind is not None and kind not in _KIND_NAMES:
        raise ValueError(f"unknown raster kind {kind!r}")
    return from_bytes(Path(path).read_bytes(), kind)


def write_raster(img: Image, path) -> None:
    Path(path).write_bytes(to_bytes(img))


def write_pgm(img: Image, path) -> None:
    """8-bit PGM preview, min-max stretched (complex images show magnitude)."""
    data = np.abs(img.data) if isinstance(img, ComplexImage) else img.data.astype(np.float64)
    lo, hi = float(data.min()), float(data.max())
    scaled = np.zeros(data.shape) if hi <= lo else (data - lo) / (hi - lo)
    pix = np.round(scaled * 255).astype(np.uint8)
    header = f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pix.tobytes())


def seeded_rng(seed: int) -> np.random.Generator:
    """Philox4x64-10 counter-based generator keyed by a 64-bit seed.

    Philox output depends only on (key, counter), so streams are identical
    across platforms and numpy versions that keep the bit generator stable.
    """
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def row_rng(seed: int, row: int) -> np.random.Generator:
    """Independent stream for one image row, keyed by (seed, row)."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(row)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
