"""Colour images of basin rasters, with dots and curves on top."""
from __future__ import annotations

import colorsys
import os
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_bytes
from .dynamics import UNDECIDED, BasinRaster, Region
from .errors import IOFailure


@dataclass(frozen=True)
class ColorScheme:
    root_colors: tuple
    petal_colors: tuple
    undecided: tuple = (255, 255, 255)
    shading: float = 0.0

    def base_color(self, label: int) -> tuple:
        k = len(self.root_colors)
        if label == UNDECIDED:
            return self.undecided
        if label < k:
            return self.root_colors[label]
        return self.petal_colors[label - k]


def default_scheme(n_roots: int, n_petals: int, shading: float = 0.0) -> ColorScheme:
    """Evenly spaced hues for roots, distinct mid grays for petals, white for undecided."""
    roots = []
    for i in range(n_roots):
        r, g, b = colorsys.hsv_to_rgb((0.6 + i / max(n_roots, 1)) % 1.0, 0.65, 0.9)
        roots.append((round(255 * r), round(255 * g), round(255 * b)))
    petals = []
    for j in range(n_petals):
        level = round(110 + 100 * j / max(n_petals - 1, 1)) if n_petals > 1 else 150
        petals.append((level, level, level))
    return ColorScheme(tuple(roots), tuple(petals), (255, 255, 255), shading)


def colorize(raster: BasinRaster, scheme: ColorScheme | None = None) -> np.ndarray:
    scheme = scheme or default_scheme(raster.n_roots, raster.n_petals)
    labels = raster.labels.astype(np.int64)
    palette = np.array([scheme.base_color(lab) for lab in
                        range(-1, raster.n_roots + raster.n_petals)], dtype=np.float64)
    img = palette[labels + 1]
    if scheme.shading > 0:
        decided = labels != UNDECIDED
        top = raster.iterations[decided].max() if decided.any() else 1
        dim = 1.0 - scheme.shading * np.log1p(raster.iterations) / np.log1p(max(top, 1))
        dim = np.where(decided, np.clip(dim, 0.0, 1.0), 1.0)
        img = img * dim[..., None]
    return np.rint(img).astype(np.uint8)


def _clip_segment(a: complex, b: complex, region: Region):
    """Liang-Barsky clip of segment ab to the region; None if it misses."""
    x0, x1 = region.center.real - region.width / 2, region.center.real + region.width / 2
    y0, y1 = region.center.imag - region.height / 2, region.center.imag + region.height / 2
    dx, dy = b.real - a.real, b.imag - a.imag
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, a.real - x0), (dx, x1 - a.real), (-dy, a.imag - y0), (dy, y1 - a.imag)):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return a + t0 * (b - a), a + t1 * (b - a)


def overlay(image: np.ndarray, region: Region, points=(), polyline=None,
            color=(0, 0, 0), radius: int = 2) -> np.ndarray:
    """Copy of ``image`` with dots at ``points`` and the clipped ``polyline`` drawn."""
    out = image.copy()
    res_y, res_x = out.shape[:2]
    res = res_x
    for z in points:
        z = complex(z)
        if not region.contains(z):
            continue
        row, col = region.to_pixel(z, res)
        r0, c0 = int(np.floor(row + 0.5)), int(np.floor(col + 0.5))
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                if dr * dr + dc * dc <= radius * radius:
                    r, c = r0 + dr, c0 + dc
                    if 0 <= r < res_y and 0 <= c < res_x:
                        out[r, c] = color
    if polyline is not None and len(polyline) > 1:
        pts = [complex(z) for z in polyline]
        px = region.width / res
        for a, b in zip(pts[:-1], pts[1:]):
            if not (np.isfinite(a) and np.isfinite(b)):
                continue
            seg = _clip_segment(a, b, region)
            if seg is None:
                continue
            a, b = seg
            n = max(2, int(np.ceil(2 * abs(b - a) / px)) + 1)
            zs = a + np.linspace(0.0, 1.0, n) * (b - a)
            rows, cols = region.to_pixel(zs, res)
            rows = np.floor(rows + 0.5).astype(int)
            cols = np.floor(cols + 0.5).astype(int)
            ok = (rows >= 0) & (rows < res_y) & (cols >= 0) & (cols < res_x)
            out[rows[ok], cols[ok]] = color
    return out


def encode_ppm(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an (height, width, 3) RGB image")
    h, w = image.shape[:2]
    if h == 0 or w == 0:
        raise ValueError("PPM images need positive dimensions")
    return f"P6 {w} {h} 255\n".encode("ascii") + image.astype(np.uint8).tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValueError("only binary P6 images with maxval 255 are supported")
    w, h = int(fields[1]), int(fields[2])
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos + 1)
    return pixels.reshape(h, w, 3).copy()


def write_image(image: np.ndarray, path, format: str | None = None) -> None:
    fmt = (format or os.path.splitext(os.fspath(path))[1].lstrip(".") or "ppm").lower()
    if fmt == "ppm":
        atomic_write_bytes(path, encode_ppm(image))
    elif fmt == "png":
        from io import BytesIO

        try:
            from PIL import Image
        except ImportError as exc:
            raise IOFailure("PNG output needs Pillow; write .ppm instead") from exc
        if image.shape[0] == 0 or image.shape[1] == 0:
            raise ValueError("images need positive dimensions")
        buf = BytesIO()
        Image.fromarray(np.asarray(image, dtype=np.uint8), "RGB").save(buf, format="PNG")
        atomic_write_bytes(path, buf.getvalue())
    else:
        raise ValueError(f"unsupported image format {fmt!r}")


def read_ppm(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            return decode_ppm(fh.read())
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
