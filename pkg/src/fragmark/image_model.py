"""Grayscale image container, 2x2 block lattice, and neighborhood geometry.

Every pipeline in the toolkit works on the same lattice: the image is cut
into non-overlapping 2x2 pixel blocks, indexed by (row, col) on a grid of
rows x cols blocks. Neighborhoods are square Chebyshev windows of odd side
r, clipped at the image borders (no wraparound).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DimensionError, ParameterError


class BlockIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class BlockGrid:
    """The lattice of 2x2 blocks: cols = width/2, rows = height/2."""

    cols: int
    rows: int

    def __post_init__(self):
        if self.cols <= 0 or self.rows <= 0:
            raise DimensionError(f"empty block grid {self.cols}x{self.rows}")

    @property
    def total(self) -> int:
        return self.cols * self.rows

    def linear(self, block: BlockIndex) -> int:
        return block.row * self.cols + block.col

    def block(self, index: int) -> BlockIndex:
        return BlockIndex(index // self.cols, index % self.cols)

    def contains(self, block: BlockIndex) -> bool:
        return 0 <= block.row < self.rows and 0 <= block.col < self.cols


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image with even, positive dimensions.

    Pixels are stored as a (height, width) uint8 array; row-major order
    matches the serialized PGM layout bit for bit.
    """

    pixels: np.ndarray

    def __post_init__(self):
        a = self.pixels
        if not isinstance(a, np.ndarray) or a.ndim != 2 or a.dtype != np.uint8:
            raise DimensionError("pixels must be a 2-D uint8 array")
        h, w = a.shape
        if h <= 0 or w <= 0 or h % 2 or w % 2:
            raise DimensionError(
                f"image dimensions must be even and positive, got {w}x{h}"
            )

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def grid(self) -> BlockGrid:
        return BlockGrid(cols=self.width // 2, rows=self.height // 2)

    def block_pixels(self, block: BlockIndex) -> tuple[int, int, int, int]:
        """The four pixels of one block in raster order p0..p3."""
        r, c = 2 * block.row, 2 * block.col
        a = self.pixels
        return (int(a[r, c]), int(a[r, c + 1]), int(a[r + 1, c]), int(a[r + 1, c + 1]))

    def copy(self) -> "GrayImage":
        return GrayImage(self.pixels.copy())


def split_into_blocks(
    image: GrayImage,
) -> tuple[BlockGrid, Iterator[tuple[BlockIndex, tuple[int, int, int, int]]]]:
    """Partition the image into 2x2 blocks.

    Returns the block grid and an iterator of (BlockIndex, (p0, p1, p2, p3))
    where block (row, col) covers pixel rows 2*row..2*row+1 and pixel
    columns 2*col..2*col+1, pixels in raster order.
    """
    grid = image.grid

    def blocks():
        for row in range(grid.rows):
            for col in range(grid.cols):
                idx = BlockIndex(row, col)
                yield idx, image.block_pixels(idx)

    return grid, blocks()


def require_odd_radius(r: int) -> int:
    """Validate the neighborhood parameter: odd integer >= 3. Returns (r-1)/2."""
    if not isinstance(r, (int, np.integer)) or r < 3 or r % 2 == 0:
        raise ParameterError(f"neighborhood parameter must be an odd integer >= 3, got {r}")
    return (r - 1) // 2


def chebyshev(a: BlockIndex, b: BlockIndex) -> int:
    return max(abs(a.row - b.row), abs(a.col - b.col))


def neighborhood_size(center: BlockIndex, r: int, grid: BlockGrid) -> int:
    """Number of grid blocks within Chebyshev distance (r-1)/2 of center.

    The window clips at the grid borders, so the count is r*r only for
    interior centers.
    """
    h = require_odd_radius(r)
    r0 = max(0, center.row - h)
    r1 = min(grid.rows - 1, center.row + h)
    c0 = max(0, center.col - h)
    c1 = min(grid.cols - 1, center.col + h)
    return (r1 - r0 + 1) * (c1 - c0 + 1)


@dataclass(frozen=True)
class Neighborhood:
    """Square Chebyshev window of odd side r centered on a block."""

    center: BlockIndex
    radius_param: int

    def __post_init__(self):
        require_odd_radius(self.radius_param)

    @property
    def half(self) -> int:
        return (self.radius_param - 1) // 2

    def contains(self, block: BlockIndex) -> bool:
        return chebyshev(self.center, block) <= self.half

    def size(self, grid: BlockGrid) -> int:
        return neighborhood_size(self.center, self.radius_param, grid)


@dataclass(frozen=True)
class TamperRegion:
    """Square region of side blocks, anchored at its top-left block."""

    origin: BlockIndex
    side: int

    def __post_init__(self):
        if self.side < 0:
            raise ParameterError(f"region side must be non-negative, got {self.side}")

    def validate_inside(self, grid: BlockGrid) -> None:
        o = self.origin
        if o.row < 0 or o.col < 0 or o.row + self.side > grid.rows or o.col + self.side > grid.cols:
            raise ParameterError(
                f"region origin ({o.row},{o.col}) side {self.side} exceeds grid "
                f"{grid.rows}x{grid.cols}"
            )

    def blocks(self) -> Iterator[BlockIndex]:
        for i in range(self.side):
            for j in range(self.side):
                yield BlockIndex(self.origin.row + i, self.origin.col + j)

    def contains(self, block: BlockIndex) -> bool:
        return (
            self.origin.row <= block.row < self.origin.row + self.side
            and self.origin.col <= block.col < self.origin.col + self.side
        )

    def mask(self, grid: BlockGrid) -> np.ndarray:
        m = np.zeros((grid.rows, grid.cols), dtype=bool)
        m[
            self.origin.row : self.origin.row + self.side,
            self.origin.col : self.origin.col + self.side,
        ] = True
        return m


def region_neighborhood_intersection(
    region: TamperRegion, center: BlockIndex, r: int, grid: BlockGrid
) -> int:
    """Exact |L ∩ R| by rectangle intersection.

    L is the region's block set, R the clipped Chebyshev window around
    center. Because the region lies inside the grid, clipping R at the
    borders never changes the intersection.
    """
    h = require_odd_radius(r)
    o = region.origin
    r0 = max(o.row, center.row - h)
    r1 = min(o.row + region.side - 1, center.row + h)
    c0 = max(o.col, center.col - h)
    c1 = min(o.col + region.side - 1, center.col + h)
    if r1 < r0 or c1 < c0:
        return 0
    return (r1 - r0 + 1) * (c1 - c0 + 1)


@dataclass
class TamperMap:
    """Per-block verdict: True = TAMPERED, False = AUTHENTIC.

    provenance records whether the map is the preliminary verdict of the
    per-block decision cases or the refined verdict after neighborhood
    propagation.
    """

    tampered: np.ndarray
    provenance: str = field(default="preliminary")

    def __post_init__(self):
        if self.tampered.dtype != bool or self.tampered.ndim != 2:
            raise ParameterError("tamper map must be a 2-D boolean array")
        if self.provenance not in ("preliminary", "refined"):
            raise ParameterError(f"unknown provenance {self.provenance!r}")

    @property
    def count(self) -> int:
        return int(self.tampered.sum())
