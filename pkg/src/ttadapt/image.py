"""Pixel-wise tone filters (gamma, contrast, exposure) on float RGB images.

Images are numpy arrays of shape (H, W, 3), float64, values in [0, 1].
Every public operation clamps its output back into [0, 1], so chained
filters cannot leak out of range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

LUM_WEIGHTS = np.array([0.27, 0.67, 0.06])


def as_image(data) -> np.ndarray:
    """Validate and convert to a (H, W, 3) float64 image array."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image dimensions must be >= 1, got shape {img.shape}")
    return img


def clamp01(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Weighted luminance 0.27 r + 0.67 g + 0.06 b, clamped to [0, 1].

    Accepts a single (3,) pixel or any (..., 3) array; returns the
    matching (...) shape.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    lum = 0.27 * rgb[..., 0] + 0.67 * rgb[..., 1] + 0.06 * rgb[..., 2]
    return np.clip(lum, 0.0, 1.0)


def enhanced_luminance(lum) -> np.ndarray:
    """Half-cosine contrast curve: 0, 0.5, 1 are fixed points, monotone on [0, 1].

    Written as 0.5*(1 + sin(pi*(x - 0.5))), identical to 0.5*(1 - cos(pi*x))
    but exact at the three fixed points in float64 (cos(pi/2) rounds to 6e-17).
    """
    lum = np.asarray(lum, dtype=np.float64)
    return 0.5 * (1.0 + np.sin(np.pi * (lum - 0.5)))


@dataclass(frozen=True)
class PixelFilterParams:
    """Adjustable tone parameters: gamma > 0, contrast in [0, 1], exposure in stops."""

    gamma: float = 1.0
    contrast: float = 0.0
    exposure: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if not 0.0 <= self.contrast <= 1.0:
            raise ParameterError(f"contrast must be in [0, 1], got {self.contrast}")

    @property
    def is_identity(self) -> bool:
        return self.gamma == 1.0 and self.contrast == 0.0 and self.exposure == 0.0


def apply_gamma(img: np.ndarray, gamma: float) -> np.ndarray:
    """Raise every channel value to the given power."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    img = as_image(img)
    return clamp01(np.power(img, gamma))


def apply_contrast(img: np.ndarray, contrast: float) -> np.ndarray:
    """Blend each pixel with its luminance-enhanced version.

    Output is contrast * En(P) + (1 - contrast) * P, where En scales the
    pixel by enhanced_luminance(Lum)/Lum. Black pixels (Lum = 0) are left
    unchanged: the ratio is the 0/0 limit and 1 is the continuity-consistent
    value there.
    """
    if not 0.0 <= contrast <= 1.0:
        raise ParameterError(f"contrast must be in [0, 1], got {contrast}")
    img = as_image(img)
    lum = luminance(img)
    ratio = np.ones_like(lum)
    positive = lum > 0.0
    ratio[positive] = enhanced_luminance(lum[positive]) / lum[positive]
    enhanced = img * ratio[..., None]
    return clamp01(contrast * enhanced + (1.0 - contrast) * img)


def apply_exposure(img: np.ndarray, exposure: float) -> np.ndarray:
    """Scale every value by 2**exposure (exposure in photographic stops)."""
    img = as_image(img)
    return clamp01(img * 2.0 ** float(exposure))


def apply_filter_chain(img: np.ndarray, params: PixelFilterParams | None = None,
                       defog_params=None) -> np.ndarray:
    """Run the full adjustable filter stack in its fixed order.

    Order is defog (when given), then gamma, contrast, exposure. The order is
    fixed so results are deterministic: haze removal models physical
    scattering and runs before the tone filters.
    """
    img = as_image(img)
    if defog_params is not None:
        from .defog import defog
        img = defog(img, defog_params)
    if params is None:
        params = PixelFilterParams()
    img = apply_gamma(img, params.gamma)
    img = apply_contrast(img, params.contrast)
    img = apply_exposure(img, params.exposure)
    return img
