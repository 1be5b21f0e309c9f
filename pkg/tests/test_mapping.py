"""Mapping strategies: constraint satisfaction, determinism, baselines."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragmark.errors import ParameterError
from fragmark.image_model import BlockGrid, BlockIndex
from fragmark.mapping import (
    ARNOLD,
    DENEIGHBORHOOD,
    OFFSET,
    RANDOM,
    build_arnold_mapping,
    build_deneighborhood_mapping,
    build_mapping,
    build_offset_mapping,
    build_random_mapping,
    dump_mapping_csv,
    hall_feasible,
    verify_mapping,
)

GRID32 = BlockGrid(cols=32, rows=32)


def _is_permutation(forward, total):
    return np.array_equal(np.sort(forward), np.arange(total))


# --- de-neighborhood ----------------------------------------------------------


def test_deneighborhood_satisfies_constraint():
    mapping = build_deneighborhood_mapping(0xA5A5, GRID32, 9)
    report = verify_mapping(mapping, GRID32)
    assert report.is_bijection
    assert report.violations == 0
    assert report.min_chebyshev_distance > 4


def test_deneighborhood_deterministic_in_key():
    a = build_deneighborhood_mapping(7, GRID32, 7)
    b = build_deneighborhood_mapping(7, GRID32, 7)
    c = build_deneighborhood_mapping(8, GRID32, 7)
    assert np.array_equal(a.forward, b.forward)
    assert not np.array_equal(a.forward, c.forward)


def test_inverse_is_exact():
    mapping = build_deneighborhood_mapping(3, GRID32, 11)
    total = GRID32.total
    assert np.array_equal(mapping.forward[mapping.inverse], np.arange(total))
    assert np.array_equal(mapping.inverse[mapping.forward], np.arange(total))


def test_hall_condition_boundary():
    grid = BlockGrid(cols=256, rows=256)
    assert hall_feasible(grid, 181)  # 181^2 = 32761 <= 32768
    assert not hall_feasible(grid, 183)


def test_small_grid_beyond_hall_still_constructs():
    # 4x4 with r=3: Hall bound says 9 > 8, yet legal targets exist for
    # every block and the repair loop finds them.
    grid = BlockGrid(cols=4, rows=4)
    assert not hall_feasible(grid, 3)
    mapping = build_deneighborhood_mapping(1, grid, 3)
    report = verify_mapping(mapping, grid)
    assert report.is_bijection and report.violations == 0


def test_center_window_swallowing_grid_rejected():
    grid = BlockGrid(cols=4, rows=4)
    with pytest.raises(ParameterError):
        build_deneighborhood_mapping(1, grid, 7)


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2**64 - 1), st.sampled_from([3, 5, 7, 9, 11]))
def test_deneighborhood_constraint_over_keys(k3, r):
    mapping = build_deneighborhood_mapping(k3, GRID32, r)
    h = (r - 1) // 2
    dist = mapping.distances()
    assert int(dist.min()) > h
    assert _is_permutation(mapping.forward, GRID32.total)


# --- baselines ----------------------------------------------------------


def test_random_mapping_has_no_fixed_points():
    for k3 in range(20):
        mapping = build_random_mapping(k3, GRID32)
        assert _is_permutation(mapping.forward, GRID32.total)
        assert int(mapping.distances().min()) > 0


def test_offset_mapping_swaps_halves():
    grid = BlockGrid(cols=16, rows=16)
    mapping = build_offset_mapping(grid)
    total = grid.total
    expected = (np.arange(total) + total // 2) % total
    assert np.array_equal(mapping.forward, expected)
    # involution: applying the offset twice is the identity
    assert np.array_equal(mapping.forward[mapping.forward], np.arange(total))
    assert np.array_equal(mapping.forward, mapping.inverse)


def test_arnold_mapping_is_bijective_and_fixes_origin():
    grid = BlockGrid(cols=8, rows=8)
    mapping = build_arnold_mapping(grid, 1)
    assert _is_permutation(mapping.forward, grid.total)
    assert mapping.forward[0] == 0
    report = verify_mapping(mapping, grid)
    assert report.is_bijection and report.violations == 0
    assert report.min_chebyshev_distance == 0


def test_arnold_period_on_8_grid():
    # iterating the cat map must return to the identity; for n=8 the
    # period is 6
    grid = BlockGrid(cols=8, rows=8)
    identity = np.arange(grid.total)
    periods = [
        k
        for k in range(1, 13)
        if np.array_equal(build_arnold_mapping(grid, k).forward, identity)
    ]
    assert periods == [6, 12]


def test_arnold_single_step_example():
    grid = BlockGrid(cols=8, rows=8)
    mapping = build_arnold_mapping(grid, 1)
    # (x, y) = (2, 3) -> ((2+3) mod 8, (2+6) mod 8) = (5, 0)
    assert mapping.forward[grid.linear(BlockIndex(2, 3))] == grid.linear(BlockIndex(5, 0))


def test_arnold_rejects_non_square():
    with pytest.raises(ParameterError):
        build_arnold_mapping(BlockGrid(cols=8, rows=4), 1)


def test_offset_rejects_odd_total():
    with pytest.raises(ParameterError):
        build_offset_mapping(BlockGrid(cols=3, rows=3))


# --- dispatch and audit ----------------------------------------------------------


def test_dispatch_covers_all_strategies():
    assert build_mapping(DENEIGHBORHOOD, 5, GRID32, r=7).strategy == DENEIGHBORHOOD
    assert build_mapping(RANDOM, 5, GRID32).strategy == RANDOM
    assert build_mapping(OFFSET, 5, GRID32).strategy == OFFSET
    assert build_mapping(ARNOLD, 5, GRID32).strategy == ARNOLD
    with pytest.raises(ParameterError):
        build_mapping(DENEIGHBORHOOD, 5, GRID32)  # r missing
    with pytest.raises(ParameterError):
        build_mapping("swirl", 5, GRID32)


def test_audit_flags_broken_bijection():
    mapping = build_random_mapping(1, GRID32)
    broken = mapping.forward.copy()
    broken[0] = broken[1]  # duplicate target
    bad = replace(mapping, forward=broken)
    assert not verify_mapping(bad, GRID32).is_bijection


def test_audit_counts_deneighborhood_violations():
    mapping = build_deneighborhood_mapping(9, GRID32, 9)
    sabotaged = mapping.forward.copy()
    i = 40
    j = int(mapping.inverse[i])
    sabotaged[i], sabotaged[j] = sabotaged[j], sabotaged[i]  # i now maps to itself
    report = verify_mapping(replace(mapping, forward=sabotaged), GRID32)
    assert report.violations >= 1
    assert report.min_chebyshev_distance == 0


def test_mapping_csv_dump(tmp_path):
    mapping = build_offset_mapping(BlockGrid(cols=4, rows=4))
    path = tmp_path / "map.csv"
    dump_mapping_csv(mapping, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,eps_i"
    assert lines[1] == "0,8"
    assert len(lines) == 17
