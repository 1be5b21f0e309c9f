"""End-to-end pipelines: watermark embedding, tamper authentication, recovery.

Embedding writes two watermarks per 2x2 block into the pixel LSBs: the
block's own 2-bit authentication tag, and the 6-bit recovery watermark of
whichever block maps here. Authentication replays the generation from the
received content and classifies every block through a five-case decision
table plus one neighborhood refinement pass. Recovery decrypts the stored
watermark of each tampered block from its mapping block and rebuilds the
block at quantized-mean fidelity.

All three stages are vectorized over the whole block grid; the only loops
are inside the keystream derivation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .codec import KeySet, auth_table, keystream6_array
from .errors import DimensionError, ParameterError, RateUndefinedError
from .image_model import BlockGrid, BlockIndex, GrayImage, TamperMap, TamperRegion
from .mapping import BlockMapping, build_mapping


@dataclass(frozen=True)
class WatermarkedImage:
    """An image carrying embedded payloads, plus the parameters needed to
    authenticate it later. The fingerprint identifies the key set without
    revealing it."""

    image: GrayImage
    r: int | None
    strategy: str
    key_fingerprint: str
    arnold_iterations: int = 1


@dataclass
class AuthenticationReport:
    """Per-block verdicts of the decision table.

    case_map holds the payload-check case (1..5) assigned to each block
    before refinement. Blocks flipped TAMPERED by the refinement pass keep
    their payload case here; labeled_cases() reports them as case 6.
    """

    preliminary: TamperMap
    final: TamperMap
    case_map: np.ndarray
    grid: BlockGrid

    @property
    def flipped(self) -> np.ndarray:
        """Blocks turned TAMPERED by refinement alone."""
        return self.final.tampered & ~self.preliminary.tampered

    def labeled_cases(self) -> np.ndarray:
        return np.where(self.flipped, np.uint8(6), self.case_map)

    def case_histogram(self) -> dict[int, int]:
        labeled = self.labeled_cases()
        return {k: int((labeled == k).sum()) for k in range(1, 7)}


@dataclass
class RecoveryResult:
    """Restored image plus the partition of the final TAMPERED set into
    blocks that were rebuilt and blocks whose recovery data was lost."""

    image: GrayImage
    recovered: np.ndarray
    unrecoverable: np.ndarray

    @property
    def recovered_count(self) -> int:
        return int(self.recovered.sum())

    @property
    def unrecoverable_count(self) -> int:
        return int(self.unrecoverable.sum())


def _block_views(pixels: np.ndarray):
    """The four per-block pixel planes p0..p3, each (rows, cols)."""
    return (
        pixels[0::2, 0::2],
        pixels[0::2, 1::2],
        pixels[1::2, 0::2],
        pixels[1::2, 1::2],
    )


def _mean6_grid(pixels: np.ndarray) -> np.ndarray:
    p0, p1, p2, p3 = _block_views(pixels)
    total = (
        (p0 >> 2).astype(np.uint16)
        + (p1 >> 2)
        + (p2 >> 2)
        + (p3 >> 2)
    )
    return (total // 4).astype(np.uint8)


def _wslot_grid(pixels: np.ndarray) -> np.ndarray:
    """The 6-bit w-slot of every block (what the block stores, not its own w)."""
    _, p1, p2, p3 = _block_views(pixels)
    return ((p1 & 3) << 4) | ((p2 & 3) << 2) | (p3 & 3)


def _resolve_mapping(
    image: GrayImage,
    keys: KeySet,
    r: int | None,
    strategy: str,
    mapping: BlockMapping | None,
    arnold_iterations: int,
) -> BlockMapping:
    if mapping is not None:
        if mapping.grid != image.grid:
            raise DimensionError("prebuilt mapping grid does not match the image")
        return mapping
    return build_mapping(strategy, keys.k3, image.grid, r=r, arnold_iterations=arnold_iterations)


def embed(
    image: GrayImage,
    keys: KeySet,
    r: int | None,
    strategy: str,
    mapping: BlockMapping | None = None,
    arnold_iterations: int = 1,
) -> WatermarkedImage:
    """Embed authentication and recovery watermarks into every block.

    Only the 2 LSBs of each pixel change; the 6 MSBs, and with them both
    watermarks, survive the embedding. A prebuilt mapping for the same
    grid may be passed to skip reconstruction.
    """
    mapping = _resolve_mapping(image, keys, r, strategy, mapping, arnold_iterations)
    grid = image.grid
    rows, cols = grid.rows, grid.cols

    m6 = _mean6_grid(image.pixels)
    ks = keystream6_array(keys.k1, grid.total).reshape(rows, cols)
    w = m6 ^ ks
    c = auth_table(keys.k2)[w]
    # slot k carries the recovery watermark of the block that maps to k
    w_incoming = w.ravel()[mapping.inverse].reshape(rows, cols)

    out = image.pixels & 0xFC
    p0, p1, p2, p3 = _block_views(out)
    p0 |= c
    p1 |= (w_incoming >> 4) & 3
    p2 |= (w_incoming >> 2) & 3
    p3 |= w_incoming & 3

    return WatermarkedImage(
        image=GrayImage(out),
        r=mapping.r,
        strategy=mapping.strategy,
        key_fingerprint=keys.fingerprint(),
        arnold_iterations=arnold_iterations,
    )


def _dilate8(mask: np.ndarray) -> np.ndarray:
    """Single-pass 8-connected dilation, no wraparound."""
    out = mask.copy()
    out[:-1, :] |= mask[1:, :]
    out[1:, :] |= mask[:-1, :]
    out[:, :-1] |= mask[:, 1:]
    out[:, 1:] |= mask[:, :-1]
    out[:-1, :-1] |= mask[1:, 1:]
    out[1:, 1:] |= mask[:-1, :-1]
    out[:-1, 1:] |= mask[1:, :-1]
    out[1:, :-1] |= mask[:-1, 1:]
    return out


def authenticate(
    image: GrayImage,
    keys: KeySet,
    r: int | None,
    strategy: str,
    mapping: BlockMapping | None = None,
    arnold_iterations: int = 1,
    expect_fingerprint: str | None = None,
) -> AuthenticationReport:
    """Classify every block through the decision table.

    With c' the extracted tag, c-hat the tag recomputed from received
    content, w' the stored recovery watermark read from the mapping block,
    and w-hat the recomputed one:

      case 1: c' != c-hat                                -> TAMPERED
      case 2: tags match, w' == w-hat                    -> AUTHENTIC
      case 3: w' mismatch, mapping block fails own tag   -> AUTHENTIC
              (the stored copy is the casualty, not this block)
      case 4: w' mismatch, mapping block passes and its
              own stored copy is consistent              -> TAMPERED
      case 5: w' mismatch, mapping block passes but its
              own copy also mismatches                   -> AUTHENTIC
      case 6: one refinement pass: a preliminarily AUTHENTIC block turns
              TAMPERED when any 8-connected neighbor is preliminarily
              TAMPERED (tampering is assumed contiguous).

    expect_fingerprint, when given, must match the key set; this catches
    verification with the wrong keys before it produces a wall of noise.
    """
    if expect_fingerprint is not None and expect_fingerprint != keys.fingerprint():
        raise ParameterError(
            f"key fingerprint mismatch: image metadata says {expect_fingerprint}, "
            f"keys are {keys.fingerprint()}"
        )
    mapping = _resolve_mapping(image, keys, r, strategy, mapping, arnold_iterations)
    grid = image.grid
    rows, cols = grid.rows, grid.cols
    fwd = mapping.forward

    pixels = image.pixels
    c_ext = pixels[0::2, 0::2] & 3
    w_hat = _mean6_grid(pixels) ^ keystream6_array(keys.k1, grid.total).reshape(rows, cols)
    c_hat = auth_table(keys.k2)[w_hat]
    w_ext = _wslot_grid(pixels).ravel()[fwd].reshape(rows, cols)

    c_pass = c_ext == c_hat
    w_match = w_ext == w_hat
    map_c_pass = c_pass.ravel()[fwd].reshape(rows, cols)
    map_w_match = w_match.ravel()[fwd].reshape(rows, cols)

    cases = np.empty((rows, cols), dtype=np.uint8)
    cases[~c_pass] = 1
    cases[c_pass & w_match] = 2
    mismatch = c_pass & ~w_match
    cases[mismatch & ~map_c_pass] = 3
    cases[mismatch & map_c_pass & map_w_match] = 4
    cases[mismatch & map_c_pass & ~map_w_match] = 5

    prelim = (cases == 1) | (cases == 4)
    final = _dilate8(prelim)

    return AuthenticationReport(
        preliminary=TamperMap(prelim, provenance="preliminary"),
        final=TamperMap(final, provenance="refined"),
        case_map=cases,
        grid=grid,
    )


def trusted_sources(report: AuthenticationReport) -> np.ndarray:
    """Blocks whose stored payload may be read during recovery.

    A block flagged only by refinement while its own payload checks were
    fully consistent (case 2) is suspect by location, not by content; its
    w-slot is still the best available copy and refusing it would orphan
    every block mapped there. Blocks whose payload checks failed (cases 1
    and 4) or were inconclusive when the neighborhood flipped them (cases
    3 and 5) are excluded.
    """
    flipped_consistent = report.flipped & (report.case_map == 2)
    return ~report.final.tampered | flipped_consistent


def recover(
    image: GrayImage,
    report: AuthenticationReport,
    keys: KeySet,
    mapping: BlockMapping,
) -> RecoveryResult:
    """Rebuild every finally-TAMPERED block whose mapping block is trusted.

    The stored watermark is decrypted with the keystream and the block is
    set to the center of its quantization bin: all four pixels become
    (w_raw << 2) | 2. Tampered blocks whose mapping block is itself
    implicated keep their content and land in the unrecoverable set.
    """
    grid = image.grid
    if report.grid != grid or mapping.grid != grid:
        raise DimensionError("report/mapping grid does not match the image")
    rows, cols = grid.rows, grid.cols
    fwd = mapping.forward

    w_ext = _wslot_grid(image.pixels).ravel()[fwd].reshape(rows, cols)
    ks = keystream6_array(keys.k1, grid.total).reshape(rows, cols)
    w_raw = w_ext ^ ks
    value = ((w_raw << 2) | 2).astype(np.uint8)

    source_ok = trusted_sources(report).ravel()[fwd].reshape(rows, cols)
    tampered = report.final.tampered
    recovered = tampered & source_ok
    unrecoverable = tampered & ~source_ok

    out = image.pixels.copy()
    for plane in _block_views(out):
        plane[recovered] = value[recovered]

    return RecoveryResult(image=GrayImage(out), recovered=recovered, unrecoverable=unrecoverable)


GroundTruth = Union[TamperRegion, np.ndarray, Iterable[BlockIndex]]


def _ground_truth_mask(ground_truth: GroundTruth, grid: BlockGrid) -> np.ndarray:
    if isinstance(ground_truth, TamperRegion):
        return ground_truth.mask(grid)
    if isinstance(ground_truth, np.ndarray):
        if ground_truth.dtype != bool or ground_truth.shape != (grid.rows, grid.cols):
            raise ParameterError("ground-truth mask must be boolean with the grid's shape")
        return ground_truth
    mask = np.zeros((grid.rows, grid.cols), dtype=bool)
    for block in ground_truth:
        if not grid.contains(block):
            raise ParameterError(f"ground-truth block {block} outside the grid")
        mask[block.row, block.col] = True
    return mask


def measure_recovery_rate(ground_truth: GroundTruth, result: RecoveryResult) -> float:
    """|recovered AND ground truth| / |ground truth|."""
    grid_rows, grid_cols = result.recovered.shape
    mask = _ground_truth_mask(ground_truth, BlockGrid(cols=grid_cols, rows=grid_rows))
    total = int(mask.sum())
    if total == 0:
        raise RateUndefinedError("recovery rate undefined for an empty tamper set")
    return int((result.recovered & mask).sum()) / total


def report_summary(report: AuthenticationReport, result: RecoveryResult | None = None) -> dict:
    """Counts and case histogram for sidecar emission."""
    summary = {
        "tampered": report.final.count,
        "tampered_preliminary": report.preliminary.count,
        "cases": report.case_histogram(),
    }
    if result is not None:
        summary["recovered"] = result.recovered_count
        summary["unrecoverable"] = result.unrecoverable_count
    return summary
