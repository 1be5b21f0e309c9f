"""SplitMix64: the deterministic 64-bit PRNG behind all keyed shuffles.

Fixed here once so every construction (mapping shuffles, repair scans,
per-trial key derivation) yields identical output for identical seeds.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Standard SplitMix64 stream with the usual 64-bit finalizer constants."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Unbiased draw from [0, bound) by bounded rejection sampling."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % bound)
        while True:
            z = self.next_u64()
            if z < limit:
                return z % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, visiting indices from high to low."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
