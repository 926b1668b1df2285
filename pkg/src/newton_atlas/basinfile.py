"""Binary raster export.

Layout (all little-endian)::

    magic      4s   b"NBAS"
    version    u32
    width      u32
    height     u32
    region     4 x f64   center.real, center.imag, width, height
    records    width*height x (label i16, component i32, iterations i32), row-major, top row first

The basin/petal counts and the census live in the JSON sidecar.
"""
from __future__ import annotations

import struct

import numpy as np

from ._io import atomic_write_bytes
from .dynamics import BasinRaster, Region
from .errors import IOFailure, RasterFormatError

MAGIC = b"NBAS"
VERSION = 1
HEADER = struct.Struct("<4sIII4d")
RECORD = np.dtype([("label", "<i2"), ("component", "<i4"), ("iterations", "<i4")])


def encode_raster(raster: BasinRaster) -> bytes:
    res = raster.resolution
    reg = raster.region
    header = HEADER.pack(MAGIC, VERSION, res, res, reg.center.real, reg.center.imag,
                         reg.width, reg.height)
    rec = np.empty(res * res, dtype=RECORD)
    rec["label"] = raster.labels.ravel()
    rec["component"] = raster.components.ravel()
    rec["iterations"] = raster.iterations.ravel()
    return header + rec.tobytes()


def decode_raster(data: bytes, n_roots: int, n_petals: int) -> BasinRaster:
    if len(data) < HEADER.size:
        raise RasterFormatError("file shorter than the raster header")
    magic, version, width, height, cx, cy, w, h = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise RasterFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise RasterFormatError(f"unsupported raster version {version}")
    if width != height:
        raise RasterFormatError("only square rasters are supported")
    expected = HEADER.size + width * height * RECORD.itemsize
    if len(data) != expected:
        raise RasterFormatError(f"expected {expected} bytes, found {len(data)}")
    rec = np.frombuffer(data, dtype=RECORD, offset=HEADER.size).reshape(height, width)
    return BasinRaster(
        region=Region(complex(cx, cy), w, h),
        resolution=width,
        labels=rec["label"].astype(np.int16),
        iterations=rec["iterations"].astype(np.int32),
        components=rec["component"].astype(np.int32),
        n_roots=n_roots,
        n_petals=n_petals,
    )


def write_raster(raster: BasinRaster, path) -> None:
    atomic_write_bytes(path, encode_raster(raster))


def read_raster(path, n_roots: int, n_petals: int) -> BasinRaster:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    return decode_raster(data, n_roots, n_petals)
