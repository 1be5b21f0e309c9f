"""Keyed watermark generation and the bit-exact LSB payload layout.

Each 2x2 block carries an 8-bit payload in the 2 LSBs of its four pixels:

    p0 LSBs <- c (authentication watermark, 2 bits)
    p1 LSBs <- w bits 5,4   (recovery watermark, MSB first)
    p2 LSBs <- w bits 3,2
    p3 LSBs <- w bits 1,0

c authenticates the block itself; the w slot holds the recovery watermark
of whichever block maps here. Both watermarks derive only from the 6 MSBs
of the pixels, so embedding never invalidates them.

The keyed primitive is PRF64(k, x) = first 8 bytes (big-endian) of
SHA-256 over the 16-byte message (k as 8 big-endian bytes || x as 8
big-endian bytes). This framing is fixed for cross-implementation
bit-exactness.
"""

from __future__ import annotations

import hashlib
import os
import stat
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import KeyFileError, ParameterError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class KeySet:
    """The three 64-bit secrets: k1 encrypts recovery watermarks, k2 keys
    the authentication hash, k3 seeds the mapping selection."""

    k1: int
    k2: int
    k3: int

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise ParameterError(f"{name} must be a 64-bit unsigned integer")

    def fingerprint(self) -> str:
        """Non-secret identifier for key-mismatch detection in sidecars."""
        blob = b"".join(k.to_bytes(8, "big") for k in (self.k1, self.k2, self.k3))
        return hashlib.sha256(blob).hexdigest()[:16]


def prf64(key: int, value: int) -> int:
    msg = key.to_bytes(8, "big") + value.to_bytes(8, "big")
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big")


def keystream6(key: int, index: int) -> int:
    """Low 6 bits of PRF64; one keystream word per block index."""
    return prf64(key, index) & 0x3F


def block_mean6(p0: int, p1: int, p2: int, p3: int) -> int:
    """6-bit quantized block mean: floor of the mean of the four 6-MSB values.

    Depends only on the 6 MSBs of each pixel, so LSB embedding cannot
    change it.
    """
    return ((p0 >> 2) + (p1 >> 2) + (p2 >> 2) + (p3 >> 2)) // 4


def gen_recovery_watermark(k1: int, index: int, p0: int, p1: int, p2: int, p3: int) -> int:
    """w = mean6 XOR keystream6(k1, index). Index-dependence blocks collage
    attacks; XOR keeps the encoding invertible for recovery."""
    return block_mean6(p0, p1, p2, p3) ^ keystream6(k1, index)


def gen_auth_watermark(k2: int, w: int) -> int:
    """c = low 2 bits of PRF64(k2, w), for w in 0..63."""
    if not 0 <= w < 64:
        raise ParameterError(f"recovery watermark out of range: {w}")
    return prf64(k2, w) & 0x3


def embed_block_payload(
    pixels: tuple[int, int, int, int], c: int, w_incoming: int
) -> tuple[int, int, int, int]:
    """Overwrite the 2 LSBs of each pixel with the payload layout above.

    w_incoming is the recovery watermark of the block that maps here, not
    this block's own.
    """
    p0, p1, p2, p3 = pixels
    return (
        (p0 & 0xFC) | (c & 0x3),
        (p1 & 0xFC) | ((w_incoming >> 4) & 0x3),
        (p2 & 0xFC) | ((w_incoming >> 2) & 0x3),
        (p3 & 0xFC) | (w_incoming & 0x3),
    )


def extract_block_payload(pixels: tuple[int, int, int, int]) -> tuple[int, int]:
    """Inverse of embed_block_payload: returns (c, w)."""
    p0, p1, p2, p3 = pixels
    c = p0 & 0x3
    w = ((p1 & 0x3) << 4) | ((p2 & 0x3) << 2) | (p3 & 0x3)
    return c, w


def keystream6_array(key: int, total: int) -> np.ndarray:
    """keystream6 for block indices 0..total-1 as a uint8 array."""
    out = np.empty(total, dtype=np.uint8)
    to_bytes = int.to_bytes
    kb = to_bytes(key, 8, "big")
    sha = hashlib.sha256
    for i in range(total):
        out[i] = sha(kb + to_bytes(i, 8, "big")).digest()[7] & 0x3F
    return out


def auth_table(k2: int) -> np.ndarray:
    """gen_auth_watermark over all 64 possible w values, as a lookup table."""
    return np.array([gen_auth_watermark(k2, w) for w in range(64)], dtype=np.uint8)


# --- key file format: three lines, K<n>=<16 hex digits> ---------------------


def generate_keyset() -> KeySet:
    """Fresh keys from the system entropy source."""
    return KeySet(*(int.from_bytes(os.urandom(8), "big") for _ in range(3)))


def write_key_file(keys: KeySet, path: str | Path) -> None:
    p = Path(path)
    text = f"K1={keys.k1:016X}\nK2={keys.k2:016X}\nK3={keys.k3:016X}\n"
    p.write_text(text)
    try:
        p.chmod(stat.S_IRUSR | stat.S_IWUSR)
    except OSError:
        pass  # platform without POSIX modes


def read_key_file(path: str | Path) -> KeySet:
    values = {}
    lines = Path(path).read_text().splitlines()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        name, sep, hexval = line.partition("=")
        if sep != "=" or name not in ("K1", "K2", "K3") or len(hexval) != 16:
            raise KeyFileError(f"{path}: line {lineno}: expected K<n>=<16 hex digits>, got {line!r}")
        try:
            values[name] = int(hexval, 16)
        except ValueError:
            raise KeyFileError(f"{path}: line {lineno}: invalid hex digits in {line!r}") from None
    missing = [k for k in ("K1", "K2", "K3") if k not in values]
    if missing:
        raise KeyFileError(f"{path}: missing {', '.join(missing)}")
    return KeySet(values["K1"], values["K2"], values["K3"])
