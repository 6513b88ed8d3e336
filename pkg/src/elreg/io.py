"""File formats.

* Binary PGM (P5), 8-bit or 16-bit big-endian samples.
* ``ELRG`` raw float images: magic, u32 LE width, u32 LE height, then
  ``width * height`` little-endian float64 samples, row-major.
* ``ELDF`` displacement fields: same header, then interleaved (ux, uy)
  float64 pairs per pixel.
* Affine transforms: one line of six decimals ``a1 .. a6``.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import ImageError
from .image import ImageGrid
from .transforms import AffineParams, DeformationField

IMAGE_MAGIC = b"ELRG"
FIELD_MAGIC = b"ELDF"


def _pgm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    i = 0
    n = len(buf)
    while len(tokens) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i : i + 1] == b"#":
            while i < n and buf[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not buf[i : i + 1].isspace() and buf[i : i + 1] != b"#":
            i += 1
        if start == i:
            raise ImageError("truncated PGM header")
        tokens.append(buf[start:i])
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def read_pgm(path) -> ImageGrid:
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens, offset = _pgm_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise ImageError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageError(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ImageError(f"{path}: invalid PGM header values")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = buf[offset : offset + expected]
    if len(raster) != expected:
        raise ImageError(f"{path}: expected {expected} raster bytes, found {len(raster)}")
    data = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return ImageGrid(data.astype(np.float64))


def write_pgm(path, img: ImageGrid, maxval: int | None = None) -> None:
    """Write a P5 PGM; samples are rounded and clipped to ``[0, maxval]``.

    ``maxval`` defaults to 255 when every sample fits in 8 bits, else 65535.
    """
    data = np.rint(img.data)
    if maxval is None:
        maxval = 255 if data.min() >= 0 and data.max() <= 255 else 65535
    if not 0 < maxval < 65536:
        raise ValueError("maxval must lie in [1, 65535]")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raster = np.clip(data, 0, maxval).astype(dtype)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (img.width, img.height, maxval))
        fh.write(raster.tobytes())


def _write_raw(path, magic: bytes, width: int, height: int, values: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(magic + struct.pack("<II", width, height))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def _read_raw(path, magic: bytes, channels: int) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != magic:
        raise ImageError(f"{path}: bad magic {buf[:4]!r}, expected {magic!r}")
    if len(buf) < 12:
        raise ImageError(f"{path}: truncated header")
    width, height = struct.unpack("<II", buf[4:12])
    count = width * height * channels
    if width < 1 or height < 1 or len(buf) != 12 + 8 * count:
        raise ImageError(f"{path}: size does not match header {width}x{height}")
    values = np.frombuffer(buf, dtype="<f8", offset=12, count=count).astype(np.float64)
    if channels == 1:
        return values.reshape(height, width)
    return values.reshape(height, width, channels)


def write_raw_image(path, img: ImageGrid) -> None:
    _write_raw(path, IMAGE_MAGIC, img.width, img.height, img.data)


def read_raw_image(path) -> ImageGrid:
    return ImageGrid(_read_raw(path, IMAGE_MAGIC, 1))


def write_field(path, field: DeformationField) -> None:
    _write_raw(path, FIELD_MAGIC, field.width, field.height, np.stack([field.ux, field.uy], axis=-1))


def read_field(path) -> DeformationField:
    values = _read_raw(path, FIELD_MAGIC, 2)
    return DeformationField(values[..., 0], values[..., 1])


def read_image(path) -> ImageGrid:
    """Dispatch on the file's magic bytes (PGM or ELRG)."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == IMAGE_MAGIC:
        return read_raw_image(path)
    if head[:2] == b"P5":
        return read_pgm(path)
    raise ImageError(f"{path}: unrecognised image format")


def write_image(path, img: ImageGrid) -> None:
    """PGM for ``.pgm``/``.pnm`` suffixes, the lossless float container otherwise."""
    if os.fspath(path).lower().endswith((".pgm", ".pnm")):
        write_pgm(path, img)
    else:
        write_raw_image(path, img)


def write_affine(path, A: AffineParams) -> None:
    with open(path, "w") as fh:
        fh.write(" ".join(np.format_float_positional(v, trim="-") for v in A.vector()) + "\n")


def read_affine(path) -> AffineParams:
    with open(path) as fh:
        values = fh.read().split()
    try:
        return AffineParams.from_vector([float(v) for v in values])
    except ValueError as exc:
        raise ImageError(f"{path}: {exc}") from None

