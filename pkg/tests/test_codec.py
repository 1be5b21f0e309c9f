"""Keyed watermark primitives and the LSB payload layout.

The reference values here were computed with hashlib directly, outside the
package, and are frozen; the inline recomputations keep the two routes
honest against each other.
"""

import hashlib
import os
import stat

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fragmark.codec import (
    KeySet,
    auth_table,
    block_mean6,
    embed_block_payload,
    extract_block_payload,
    gen_auth_watermark,
    gen_recovery_watermark,
    generate_keyset,
    keystream6,
    keystream6_array,
    prf64,
    read_key_file,
    write_key_file,
)
from fragmark.errors import KeyFileError, ParameterError

from helpers import KEYS

pixel = st.integers(0, 255)
quad = st.tuples(pixel, pixel, pixel, pixel)


def _prf_reference(key: int, value: int) -> int:
    msg = key.to_bytes(8, "big") + value.to_bytes(8, "big")
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big")


# --- keyed primitives ----------------------------------------------------------


def test_prf64_frozen_value():
    assert prf64(KEYS.k1, 0) == 0x0DA8F9452A1B91C5
    assert prf64(KEYS.k1, 0) == _prf_reference(KEYS.k1, 0)


def test_keystream_frozen_values():
    assert keystream6(KEYS.k1, 0) == 5
    assert keystream6(KEYS.k1, 1) == 13


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**20))
def test_prf64_matches_reference(key, value):
    assert prf64(key, value) == _prf_reference(key, value)


def test_auth_table_frozen_prefix():
    expected = [0, 1, 0, 0, 2, 2, 2, 0, 1, 1, 2, 0, 2, 1, 1, 0]
    table = auth_table(KEYS.k2)
    assert list(table[:16]) == expected
    assert all(table[w] == gen_auth_watermark(KEYS.k2, w) for w in range(64))


def test_auth_watermark_domain():
    with pytest.raises(ParameterError):
        gen_auth_watermark(KEYS.k2, 64)
    with pytest.raises(ParameterError):
        gen_auth_watermark(KEYS.k2, -1)


def test_keystream_array_matches_scalar():
    arr = keystream6_array(KEYS.k1, 100)
    assert arr.dtype == np.uint8
    assert list(arr) == [keystream6(KEYS.k1, i) for i in range(100)]


# --- block digests ----------------------------------------------------------


def test_mean6_examples():
    assert block_mean6(0, 0, 0, 255) == 15
    assert block_mean6(200, 201, 199, 202) == 49
    assert block_mean6(255, 255, 255, 255) == 63
    assert block_mean6(0, 0, 0, 0) == 0


@given(quad, st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_mean6_ignores_lsbs(pixels, a, b, c, d):
    p0, p1, p2, p3 = pixels
    base = block_mean6(p0, p1, p2, p3)
    assert block_mean6((p0 & 0xFC) | a, (p1 & 0xFC) | b, (p2 & 0xFC) | c, (p3 & 0xFC) | d) == base


def test_recovery_watermark_example():
    # mean6 49, keystream 5 at index 0
    assert gen_recovery_watermark(KEYS.k1, 0, 200, 201, 199, 202) == 49 ^ 5


@given(st.integers(0, 2**20), quad)
def test_recovery_watermark_range(index, pixels):
    w = gen_recovery_watermark(KEYS.k1, index, *pixels)
    assert 0 <= w < 64


# --- payload layout ----------------------------------------------------------


@given(quad, st.integers(0, 3), st.integers(0, 63))
def test_payload_round_trip(pixels, c, w):
    embedded = embed_block_payload(pixels, c, w)
    assert extract_block_payload(embedded) == (c, w)
    for before, after in zip(pixels, embedded):
        assert before & 0xFC == after & 0xFC


def test_payload_bit_positions():
    # w = 0b110110 lands MSB-first: p1 gets 11, p2 gets 01, p3 gets 10
    embedded = embed_block_payload((0, 0, 0, 0), 0b10, 0b110110)
    assert embedded == (0b10, 0b11, 0b01, 0b10)


# --- key material ----------------------------------------------------------


def test_keyset_range_checked():
    with pytest.raises(ParameterError):
        KeySet(-1, 0, 0)
    with pytest.raises(ParameterError):
        KeySet(0, 2**64, 0)


def test_fingerprint_shape_and_sensitivity():
    fp = KEYS.fingerprint()
    assert len(fp) == 16 and int(fp, 16) >= 0
    other = KeySet(KEYS.k1 ^ 1, KEYS.k2, KEYS.k3)
    assert other.fingerprint() != fp


def test_generate_keyset_is_fresh():
    assert generate_keyset() != generate_keyset()


def test_key_file_round_trip(tmp_path):
    path = tmp_path / "keys.txt"
    write_key_file(KEYS, path)
    assert read_key_file(path) == KEYS
    if os.name == "posix":
        mode = stat.S_IMODE(path.stat().st_mode)
        assert mode == stat.S_IRUSR | stat.S_IWUSR


def test_key_file_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("K1=0123456789ABCDEF\nK2=nope\n")
    with pytest.raises(KeyFileError, match="line 2"):
        read_key_file(path)
    path.write_text("K1=0123456789ABCDEF\nK2=FEDCBA9876543210\n")
    with pytest.raises(KeyFileError, match="K3"):
        read_key_file(path)
