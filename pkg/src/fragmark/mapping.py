"""Block-mapping strategies: where each block's recovery watermark lives.

The de-neighborhood strategy is the centerpiece: a keyed random bijection
over block indices in which every block's target lies strictly outside the
r x r Chebyshev window around it, so a contiguous tamper region rarely
destroys a block together with its recovery data. Random, fixed-offset,
and Arnold scrambling baselines sit behind the same BlockMapping surface
for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MappingConstructionError, ParameterError
from .image_model import BlockGrid, require_odd_radius
from .rng import SplitMix64

DENEIGHBORHOOD = "deneighborhood"
RANDOM = "random"
OFFSET = "offset"
ARNOLD = "arnold"

STRATEGIES = (DENEIGHBORHOOD, RANDOM, OFFSET, ARNOLD)

_REPAIR_PASSES = 64
_PARTNER_TRIES = 256


@dataclass(frozen=True)
class BlockMapping:
    """A bijection over linear block indices with its inverse and provenance."""

    forward: np.ndarray
    inverse: np.ndarray
    strategy: str
    grid: BlockGrid
    r: int | None = None

    def distances(self) -> np.ndarray:
        """Chebyshev distance from every block to its mapping target."""
        cols = self.grid.cols
        idx = np.arange(self.grid.total)
        rows_from, cols_from = idx // cols, idx % cols
        rows_to, cols_to = self.forward // cols, self.forward % cols
        return np.maximum(np.abs(rows_from - rows_to), np.abs(cols_from - cols_to))


@dataclass(frozen=True)
class MappingReport:
    """Exhaustive audit of a mapping against its constraints."""

    is_bijection: bool
    min_chebyshev_distance: int
    violations: int


def _inverse_of(forward: np.ndarray) -> np.ndarray:
    inverse = np.empty_like(forward)
    inverse[forward] = np.arange(len(forward))
    return inverse


def hall_feasible(grid: BlockGrid, r: int) -> bool:
    """Sufficient feasibility condition: r^2 <= total/2 guarantees a
    de-neighborhood bijection exists (Hall's theorem on the allowed-target
    bipartite graph)."""
    return r * r <= grid.total / 2


def build_deneighborhood_mapping(k3: int, grid: BlockGrid, r: int) -> BlockMapping:
    """Keyed bijection with every target outside its source's r-window.

    Construction: SplitMix64(k3)-seeded Fisher-Yates shuffle, then repair
    passes that swap violating targets pairwise. A swap is applied only
    when it leaves both positions satisfied, so violations strictly
    decrease and the result is deterministic in (k3, grid, r).

    Parameters beyond the Hall bound r^2 <= total/2 are still attempted
    (smaller grids are often feasible regardless); failure to repair
    raises MappingConstructionError rather than relaxing the constraint.
    """
    h = require_odd_radius(r)
    total = grid.total
    cols = grid.cols

    # A block at the grid's center sees the largest clipped window; if that
    # window swallows the whole grid there is no legal target at all.
    mid = ((grid.rows - 1) // 2, (grid.cols - 1) // 2)
    center_rows = min(grid.rows - 1, mid[0] + h) - max(0, mid[0] - h) + 1
    center_cols = min(grid.cols - 1, mid[1] + h) - max(0, mid[1] - h) + 1
    if center_rows * center_cols >= total:
        raise ParameterError(
            f"r={r} leaves no legal mapping target on a {grid.cols}x{grid.rows} grid"
        )

    rng = SplitMix64(k3)
    forward = list(range(total))
    rng.shuffle(forward)

    def ok(src: int, tgt: int) -> bool:
        return max(abs(src // cols - tgt // cols), abs(src % cols - tgt % cols)) > h

    def violating() -> list[int]:
        return [i for i in range(total) if not ok(i, forward[i])]

    for _ in range(_REPAIR_PASSES):
        bad = violating()
        if not bad:
            break
        rng.shuffle(bad)
        for i in bad:
            if ok(i, forward[i]):
                continue  # already repaired by an earlier swap
            for _ in range(_PARTNER_TRIES):
                j = rng.below(total)
                if j != i and ok(i, forward[j]) and ok(j, forward[i]):
                    forward[i], forward[j] = forward[j], forward[i]
                    break

    residual = len(violating())
    if residual:
        raise MappingConstructionError(
            f"de-neighborhood repair failed after {_REPAIR_PASSES} passes "
            f"({residual} violations remain) for r={r} on {grid.cols}x{grid.rows}",
            violations=residual,
        )
    fwd = np.array(forward, dtype=np.int64)
    return BlockMapping(fwd, _inverse_of(fwd), DENEIGHBORHOOD, grid, r=r)


def build_random_mapping(k3: int, grid: BlockGrid) -> BlockMapping:
    """Seeded Fisher-Yates permutation with fixed points repaired away
    (a block must never store its own recovery data)."""
    total = grid.total
    if total < 2:
        raise ParameterError("random mapping needs at least 2 blocks")
    rng = SplitMix64(k3)
    forward = list(range(total))
    rng.shuffle(forward)
    forward = np.array(forward, dtype=np.int64)
    for i in range(total):
        if forward[i] == i:
            j = (i + 1) % total
            forward[i], forward[j] = forward[j], forward[i]
    return BlockMapping(forward, _inverse_of(forward), RANDOM, grid)


def build_offset_mapping(grid: BlockGrid) -> BlockMapping:
    """Fixed half-image offset: upper half maps to lower and vice versa."""
    total = grid.total
    if total % 2:
        raise ParameterError("offset mapping needs an even number of blocks")
    forward = (np.arange(total, dtype=np.int64) + total // 2) % total
    return BlockMapping(forward, _inverse_of(forward), OFFSET, grid)


def build_arnold_mapping(grid: BlockGrid, iterations: int = 1) -> BlockMapping:
    """Arnold cat-map scrambling (x, y) -> ((x + y) mod n, (x + 2y) mod n),
    iterated; bijective by unimodularity. Square grids only."""
    if grid.cols != grid.rows:
        raise ParameterError(
            f"Arnold mapping needs a square grid, got {grid.cols}x{grid.rows}"
        )
    if iterations < 1:
        raise ParameterError(f"iterations must be positive, got {iterations}")
    n = grid.cols
    idx = np.arange(grid.total, dtype=np.int64)
    x, y = idx // n, idx % n
    for _ in range(iterations):
        x, y = (x + y) % n, (x + 2 * y) % n
    forward = x * n + y
    return BlockMapping(forward, _inverse_of(forward), ARNOLD, grid)


def build_mapping(
    strategy: str, k3: int, grid: BlockGrid, r: int | None = None, arnold_iterations: int = 1
) -> BlockMapping:
    """Strategy dispatch used by the protocol and CLI layers."""
    if strategy == DENEIGHBORHOOD:
        if r is None:
            raise ParameterError("de-neighborhood mapping needs the parameter r")
        return build_deneighborhood_mapping(k3, grid, r)
    if strategy == RANDOM:
        return build_random_mapping(k3, grid)
    if strategy == OFFSET:
        return build_offset_mapping(grid)
    if strategy == ARNOLD:
        return build_arnold_mapping(grid, arnold_iterations)
    raise ParameterError(f"unknown mapping strategy {strategy!r}")


def verify_mapping(mapping: BlockMapping, grid: BlockGrid) -> MappingReport:
    """Exhaustive constraint audit; reports, never raises."""
    forward = mapping.forward
    is_bijection = (
        len(forward) == grid.total
        and np.array_equal(np.sort(forward), np.arange(grid.total))
        and np.array_equal(mapping.inverse[forward], np.arange(grid.total))
    )
    dist = mapping.distances()
    min_dist = int(dist.min()) if len(dist) else 0
    if mapping.strategy == DENEIGHBORHOOD and mapping.r is not None:
        violations = int((dist <= (mapping.r - 1) // 2).sum())
    elif mapping.strategy == ARNOLD:
        violations = 0  # scrambling carries no distance constraint; (0,0) stays put
    else:
        violations = int((dist == 0).sum())
    return MappingReport(bool(is_bijection), min_dist, violations)


def dump_mapping_csv(mapping: BlockMapping, path: str | Path) -> None:
    """Audit dump: one `i,eps_i` row per block."""
    with open(path, "w", newline="") as fh:
        fh.write("i,eps_i\n")
        for i, e in enumerate(mapping.forward):
            fh.write(f"{i},{int(e)}\n")
