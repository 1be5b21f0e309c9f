"""Shared test utilities: deterministic images and block-level edits."""

import numpy as np

from fragmark.codec import KeySet
from fragmark.image_model import BlockIndex, GrayImage

KEYS = KeySet(0x0123456789ABCDEF, 0xFEDCBA9876543210, 0x1122334455667788)


def random_image(seed: int, height: int = 32, width: int = 32) -> GrayImage:
    rng = np.random.default_rng(seed)
    return GrayImage(rng.integers(0, 256, (height, width), dtype=np.uint8))


def pixel_rect(block: BlockIndex) -> tuple[slice, slice]:
    """Pixel-array slices covering one 2x2 block."""
    return slice(2 * block.row, 2 * block.row + 2), slice(2 * block.col, 2 * block.col + 2)
