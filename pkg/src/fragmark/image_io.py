"""Image file I/O: binary PGM (P5, maxval 255) and grayscale PNG.

PGM is the native format: reads and writes are bit-exact, which the fragile
watermark requires (a single flipped LSB is a detection). PNG is lossless
grayscale and is offered behind the same two calls, dispatched on file
extension.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import DimensionError, FragmarkError
from .image_model import GrayImage

_PGM_HEADER = re.compile(rb"^P5\s+(?:#.*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def read_pgm(path: str | Path) -> GrayImage:
    data = Path(path).read_bytes()
    m = _PGM_HEADER.match(data)
    if not m:
        raise FragmarkError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FragmarkError(f"{path}: only maxval 255 is supported, got {maxval}")
    raster = data[m.end() :]
    expected = width * height
    if len(raster) < expected:
        raise FragmarkError(f"{path}: raster truncated ({len(raster)} < {expected} bytes)")
    pixels = np.frombuffer(raster[:expected], dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels.copy())


def write_pgm(image: GrayImage, path: str | Path) -> None:
    header = f"P5\n{image.width} {image.height}\n255\n".encode()
    Path(path).write_bytes(header + image.pixels.tobytes())


def read_png(path: str | Path) -> GrayImage:
    from PIL import Image

    with Image.open(path) as img:
        if img.mode != "L":
            img = img.convert("L")
        pixels = np.asarray(img, dtype=np.uint8)
    return GrayImage(pixels.copy())


def write_png(image: GrayImage, path: str | Path) -> None:
    from PIL import Image

    Image.fromarray(image.pixels, mode="L").save(path, format="PNG")


def read_image(path: str | Path) -> GrayImage:
    """Load a grayscale image, dispatching on extension (.pgm or .png)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return read_png(path)
    return read_pgm(path)


def write_image(image: GrayImage, path: str | Path) -> None:
    """Save a grayscale image, dispatching on extension (.pgm or .png)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        write_png(image, path)
    else:
        write_pgm(image, path)


def write_block_mask(mask: np.ndarray, path: str | Path, pixel_resolution: bool = False) -> None:
    """Write a boolean block mask as a PGM (255 = TAMPERED, 0 = AUTHENTIC).

    With pixel_resolution, each block expands to its 2x2 pixel footprint so
    the mask overlays the original image.
    """
    if mask.dtype != bool or mask.ndim != 2:
        raise DimensionError("mask must be a 2-D boolean array")
    plane = np.where(mask, 255, 0).astype(np.uint8)
    if pixel_resolution:
        plane = np.kron(plane, np.ones((2, 2), dtype=np.uint8))
    header = f"P5\n{plane.shape[1]} {plane.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + plane.tobytes())
