"""Recovery-rate theory for square tamper regions.

The probability that a tampered block can be recovered equals the chance
that its mapping target fell outside the tampered area. With the target
drawn uniformly from everything outside the block's r x r window R, the
per-block rate is

    H(B) = 1 - (|L| - |L n R_B|) / (n^2 - |R_B|)

for a tamper region L on an n x n block grid. Everything here evaluates
that expression by exact rectangle counting (border clipping included),
with the interior closed forms kept as an independent cross-check route.
Random (unconstrained) mapping admits the flat rate 1 - |L|/n^2; the
margin between the two quantifies what the placement constraint buys.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import ParameterError
from .image_model import (
    BlockGrid,
    BlockIndex,
    TamperRegion,
    neighborhood_size,
    region_neighborhood_intersection,
    require_odd_radius,
)


@dataclass(frozen=True)
class TheoryParams:
    """Geometry of one theoretical scenario: n x n grid, window parameter r,
    l x l tamper square anchored at origin (0-based block coordinates)."""

    n: int
    r: int
    l: int
    origin: BlockIndex = BlockIndex(0, 0)

    def __post_init__(self):
        require_odd_radius(self.r)
        if self.n < 2:
            raise ParameterError(f"grid side must be at least 2 blocks, got {self.n}")
        if self.l < 1:
            raise ParameterError(f"tamper side must be at least 1 block, got {self.l}")
        self.region.validate_inside(self.grid)

    @property
    def grid(self) -> BlockGrid:
        return BlockGrid(cols=self.n, rows=self.n)

    @property
    def region(self) -> TamperRegion:
        return TamperRegion(self.origin, self.l)

    @property
    def half(self) -> int:
        return (self.r - 1) // 2


@dataclass(frozen=True)
class RecoveryProfile:
    """Per-block theoretical rates over the tamper square, plus their mean."""

    rates: np.ndarray
    average: float

    def __post_init__(self):
        if np.any(self.rates < 0) or np.any(self.rates > 1):
            raise ParameterError("recovery rates must lie in [0, 1]")


def block_recovery_rate_exact(params: TheoryParams, block: BlockIndex) -> float:
    """Exact per-block rate by rectangle counting; block must lie in L."""
    if not params.region.contains(block):
        raise ParameterError(f"block {block} is outside the tamper region")
    window = neighborhood_size(block, params.r, params.grid)
    inter = region_neighborhood_intersection(params.region, block, params.r, params.grid)
    area = params.l * params.l
    return 1.0 - (area - inter) / (params.n * params.n - window)


def _axis_counts(origin: int, l: int, h: int, n: int):
    """Per-axis window extents and L-overlap lengths for all l positions."""
    pos = np.arange(origin, origin + l)
    lo = np.maximum(pos - h, 0)
    hi = np.minimum(pos + h, n - 1)
    extent = hi - lo + 1
    olo = np.maximum(pos - h, origin)
    ohi = np.minimum(pos + h, origin + l - 1)
    overlap = np.maximum(ohi - olo + 1, 0)
    return extent, overlap


def average_recovery_rate(params: TheoryParams) -> RecoveryProfile:
    """H(B) from the module docstring, averaged over all l^2 blocks of L.

    Window size and L-intersection both factor per axis, so the whole
    profile is two outer products.
    """
    h = params.half
    row_ext, row_ov = _axis_counts(params.origin.row, params.l, h, params.n)
    col_ext, col_ov = _axis_counts(params.origin.col, params.l, h, params.n)
    window = np.outer(row_ext, col_ext)
    inter = np.outer(row_ov, col_ov)
    area = params.l * params.l
    rates = 1.0 - (area - inter) / (params.n * params.n - window)
    return RecoveryProfile(rates=rates, average=float(rates.mean()))


def closed_form_ud(r: int, l: int, i: int, j: int) -> tuple[int, int]:
    """Side lengths (u, d) of the L/window intersection for the block in
    row i, column j of L (1-based, matching the usual piecewise statement).

    One geometric expression covers all three regimes (full containment,
    window wider than L, L wider than window); the piecewise branches are
    recovered as special cases. Interior placement assumed.
    """
    h = require_odd_radius(r)
    if not (1 <= i <= l and 1 <= j <= l):
        raise ParameterError(f"(i, j) = ({i}, {j}) outside the 1..{l} range")
    u = min(l, i + h) - max(1, i - h) + 1
    d = min(l, j + h) - max(1, j - h) + 1
    return u, d


def closed_form_block_rate(params: TheoryParams, i: int, j: int) -> float:
    """Interior-placement rate via (u, d): 1 - (l^2 - u*d)/(n^2 - r^2)."""
    _require_interior(params)
    u, d = closed_form_ud(params.r, params.l, i, j)
    return 1.0 - (params.l * params.l - u * d) / (params.n * params.n - params.r * params.r)


def _require_interior(params: TheoryParams) -> None:
    h = params.half
    o = params.origin
    if (
        o.row < h
        or o.col < h
        or o.row + params.l - 1 + h > params.n - 1
        or o.col + params.l - 1 + h > params.n - 1
    ):
        raise ParameterError(
            "closed forms assume interior placement (no window clipped at the grid border)"
        )


def random_tamper_rate(n: int, tampered_count: int) -> float:
    """Flat recovery rate when tampered blocks are scattered uniformly
    (or equivalently when the mapping is an unconstrained permutation)."""
    total = n * n
    if not 0 <= tampered_count <= total:
        raise ParameterError(f"tampered count {tampered_count} outside 0..{total}")
    return 1.0 - tampered_count / total


def superiority_margin(params: TheoryParams, block: BlockIndex) -> float:
    """Q = H(block) - (1 - l^2/n^2): the per-block gain of the placement
    constraint over an unconstrained random mapping. Positive whenever
    r <= n*sqrt(u*d)/l."""
    return block_recovery_rate_exact(params, block) - (
        1.0 - params.l * params.l / (params.n * params.n)
    )


STANDARD_POSITIONS = ("corner", "paper", "center")


def position_sweep(
    n: int, r: int, l: int, positions: Iterable[str] = STANDARD_POSITIONS
) -> dict[str, float]:
    """Average rate for the same (n, r, l) at named region placements.

    corner anchors L at (0,0); paper at (3,5), the placement used in the
    reference experiments; center centers L on the grid.
    """
    anchors = {
        "corner": BlockIndex(0, 0),
        "paper": BlockIndex(3, 5),
        "center": BlockIndex((n - l) // 2, (n - l) // 2),
    }
    out = {}
    for name in positions:
        if name not in anchors:
            raise ParameterError(f"unknown position {name!r}; pick from {sorted(anchors)}")
        params = TheoryParams(n=n, r=r, l=l, origin=anchors[name])
        out[name] = average_recovery_rate(params).average
    return out


# --- delimited emission ------------------------------------------------------


def emit_theory_table(
    stream: IO[str],
    n: int,
    r_values: Iterable[int],
    l_values: Iterable[int],
    origin: BlockIndex = BlockIndex(0, 0),
) -> None:
    """`r,l,H_avg_theory` rows for every (r, l) combination."""
    stream.write("r,l,H_avg_theory\n")
    for r in r_values:
        for l in l_values:
            profile = average_recovery_rate(TheoryParams(n=n, r=r, l=l, origin=origin))
            stream.write(f"{r},{l},{profile.average:.6f}\n")


def emit_block_heatmap(stream: IO[str], params: TheoryParams) -> None:
    """Per-block rate grid of L, one CSV row per block row."""
    profile = average_recovery_rate(params)
    for row in profile.rates:
        stream.write(",".join(f"{v:.6f}" for v in row) + "\n")
