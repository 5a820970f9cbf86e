"""256-bit DCT perceptual hash for screenshot similarity.

The image is reduced to 64x64 grayscale, transformed with an orthonormal 2D
DCT, and the 16x16 low-frequency block is thresholded at its median, giving
a 256-bit signature compared by Hamming distance.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy.fft import dctn

HASH_BITS = 256
_GRID = 16  # 16x16 low-frequency block
_RESIZE = 64  # 4x oversampling before the DCT


def perceptual_hash(image: Image.Image | str | Path) -> int:
    """Hash an image (or a path to one) into a 256-bit integer.

    Depends only on pixel values, so lossless re-encodings hash identically.
    """
    if not isinstance(image, Image.Image):
        with Image.open(image) as im:
            return perceptual_hash(im)
    gray = image.convert("L").resize((_RESIZE, _RESIZE), Image.LANCZOS)
    spectrum = dctn(np.asarray(gray, dtype=np.float64), norm="ortho")
    low = spectrum[:_GRID, :_GRID]
    bits = (low > np.median(low)).flatten()
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    return value


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()
