"""Ten-variant image augmentation: original, horizontal flip, 8 one-pixel shifts.

Images are ``(height, width, channels)`` uint8 arrays. Shifts zero-fill
the pixels they vacate.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

# (dx, dy) for variants 2..9; dx > 0 moves content right, dy > 0 moves it down
SHIFTS = (
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
)

VARIANT_NAMES = ("original", "hflip") + tuple(f"shift({dx:+d},{dy:+d})" for dx, dy in SHIFTS)
NUM_VARIANTS = len(VARIANT_NAMES)


def as_image(img) -> np.ndarray:
    """Validate and normalise an image to a 3-d uint8 array."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DataError(f"image must be HxW or HxWxC, got shape {arr.shape}")
    if not 1 <= arr.shape[2] <= 4:
        raise DataError(f"image must have 1 to 4 channels, got {arr.shape[2]}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min(initial=0) < 0 or arr.max(initial=0) > 255:
            raise DataError(f"image samples must be 8-bit, got dtype {arr.dtype}")
        arr = arr.astype(np.uint8)
    return arr


def hflip(img) -> np.ndarray:
    """Mirror columns: column ``j`` goes to ``width - 1 - j``."""
    return np.ascontiguousarray(as_image(img)[:, ::-1, :])


def shift(img, dx: int, dy: int) -> np.ndarray:
    """Translate by one pixel; ``out[y, x] = img[y - dy, x - dx]``, zero outside."""
    img = as_image(img)
    if dx not in (-1, 0, 1) or dy not in (-1, 0, 1):
        raise ValueError(f"shift offsets must be in {{-1, 0, 1}}, got ({dx}, {dy})")
    if dx == 0 and dy == 0:
        return img.copy()
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    dst_rows = slice(max(dy, 0), h + min(dy, 0))
    src_rows = slice(max(-dy, 0), h + min(-dy, 0))
    dst_cols = slice(max(dx, 0), w + min(dx, 0))
    src_cols = slice(max(-dx, 0), w + min(-dx, 0))
    out[dst_rows, dst_cols] = img[src_rows, src_cols]
    return out


def generate_variants(img) -> list[np.ndarray]:
    """The ten variants in the fixed order given by ``VARIANT_NAMES``."""
    img = as_image(img)
    h, w = img.shape[:2]
    if h < 2 or w < 2:
        raise DataError(f"augmentation needs at least 2x2 pixels, got {h}x{w}")
    return [img.copy(), hflip(img)] + [shift(img, dx, dy) for dx, dy in SHIFTS]


class ProjectionExtractor:
    """Stand-in feature extractor for images when no DNN is available.

    Flattens the image to float64 in [0, 1]; with ``dim`` set, multiplies
    by a fixed Gaussian projection drawn from ``seed`` (scaled by
    ``1/sqrt(dim)``). The projection is generated lazily once the input
    size is known and reused afterwards.
    """

    def __init__(self, dim: int | None = None, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._proj = None

    def __call__(self, img) -> np.ndarray:
        flat = as_image(img).reshape(-1).astype(np.float64) / 255.0
        if self.dim is None:
            return flat
        if self._proj is None or self._proj.shape[0] != flat.shape[0]:
            rng = np.random.default_rng(self.seed)
            self._proj = rng.standard_normal((flat.shape[0], self.dim)) / np.sqrt(self.dim)
        return flat @ self._proj

    def variants(self, img) -> np.ndarray:
        """Feature vectors of all ten variants, shape ``(10, dim)``."""
        return np.stack([self(v) for v in generate_variants(img)])
