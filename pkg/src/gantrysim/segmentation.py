"""Chroma-key segmentation on the CIELAB blue-yellow axis, plus background
subtraction and binary mask morphology.

Color pipeline constants, fixed for reproducibility:

- sRGB decoding: linear below 0.04045/12.92, gamma 2.4 above.
- Linear RGB -> XYZ via the standard sRGB/D65 matrix below.
- White point: D65, defined as the matrix applied to (1, 1, 1) (row sums),
  which makes every gray land exactly on the achromatic axis (b = 0).

The b channel is negative for blue and positive for yellow, so keying
fabric sits far below zero while plant and soil tones sit above it; the
default threshold is b = 0.
"""

import enum

import numpy as np
from scipy import ndimage

SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
D65_WHITE = SRGB_TO_XYZ.sum(axis=1)

DEFAULT_THRESHOLD = 0.0


class MorphOp(enum.Enum):
    DILATE = "dilate"
    ERODE = "erode"
    FILL_HOLES = "fill_holes"


def _as_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) RGB image, got shape {img.shape}")
    return img


def b_channel(img: np.ndarray) -> np.ndarray:
    """Per-pixel CIELAB b values of an 8-bit sRGB image, as float64."""
    srgb = _as_rgb(img).astype(np.float64) / 255.0
    linear = np.where(srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ SRGB_TO_XYZ.T
    t = xyz / D65_WHITE
    delta = 6.0 / 29.0
    fxyz = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    return 200.0 * (fxyz[..., 1] - fxyz[..., 2])


def threshold_keyout(bmap: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Foreground mask: pixels whose b value exceeds the threshold."""
    return np.asarray(bmap) > threshold


def background_subtract(
    img: np.ndarray, background_img: np.ndarray, tolerance: int = 0
) -> np.ndarray:
    """Foreground mask: pixels whose max channel difference from a reference
    shot of the same pose exceeds the tolerance."""
    img = _as_rgb(img)
    background_img = _as_rgb(background_img)
    if img.shape != background_img.shape:
        raise ValueError(
            f"image shapes differ: {img.shape} vs {background_img.shape}"
        )
    diff = np.abs(img.astype(np.int16) - background_img.astype(np.int16)).max(axis=2)
    return diff > tolerance


def _square(radius: int) -> np.ndarray:
    if radius < 1:
        raise ValueError(f"kernel radius must be >= 1, got {radius!r}")
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def dilate(mask: np.ndarray, radius: int = 1) -> np.ndarray:
    return ndimage.binary_dilation(np.asarray(mask, dtype=bool), structure=_square(radius))


def erode(mask: np.ndarray, radius: int = 1) -> np.ndarray:
    return ndimage.binary_erosion(np.asarray(mask, dtype=bool), structure=_square(radius))


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Fill background regions not 4-connected to the mask border."""
    return ndimage.binary_fill_holes(np.asarray(mask, dtype=bool))


def morphology(mask: np.ndarray, op: MorphOp, radius: int = 1) -> np.ndarray:
    if op is MorphOp.DILATE:
        return dilate(mask, radius)
    if op is MorphOp.ERODE:
        return erode(mask, radius)
    if op is MorphOp.FILL_HOLES:
        return fill_holes(mask)
    raise ValueError(f"unknown morphology op {op!r}")


def box_blur(img: np.ndarray, radius: int = 1) -> np.ndarray:
    """Uniform blur hook for real photographs; rendered images are noiseless
    and skip it."""
    if radius < 1:
        raise ValueError(f"blur radius must be >= 1, got {radius!r}")
    img = _as_rgb(img).astype(np.float64)
    size = 2 * radius + 1
    blurred = ndimage.uniform_filter(img, size=(size, size, 1), mode="nearest")
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)
