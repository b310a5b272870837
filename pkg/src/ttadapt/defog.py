"""Dark-channel-prior defogging with an adjustable strength parameter.

The filter follows the classic haze model I = J*t + A*(1 - t): estimate the
atmospheric light A from the brightest dark-channel pixels, derive a
transmission map whose aggressiveness is controlled by ``strength``, and
invert the model to recover the scene.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import minimum_filter

from .errors import DegenerateAtmosphereError, ParameterError
from .image import as_image, clamp01


@dataclass(frozen=True)
class DefogParams:
    """Settings for the defogging filter.

    strength: how much of the estimated haze to remove, 0 (none) to 1 (all).
    airlight_frac: fraction of pixels (brightest in the dark channel) averaged
        into the atmospheric-light estimate.
    window: odd side length of the dark-channel patch.
    t_floor: lower bound on transmission; the model inversion is singular at
        t = 0, which strength = 1 produces on self-similar regions.
    """

    strength: float = 0.95
    airlight_frac: float = 0.001
    window: int = 15
    t_floor: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ParameterError(f"strength must be in [0, 1], got {self.strength}")
        if not 0.0 < self.airlight_frac <= 0.05:
            raise ParameterError(
                f"airlight_frac must be in (0, 0.05], got {self.airlight_frac}")
        if self.window < 1 or self.window % 2 == 0:
            raise ParameterError(f"window must be odd and >= 1, got {self.window}")
        if not 0.0 < self.t_floor < 1.0:
            raise ParameterError(f"t_floor must be in (0, 1), got {self.t_floor}")


def _check_window(window: int, height: int, width: int) -> None:
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 1, got {window}")
    if window > min(height, width):
        raise ParameterError(
            f"window {window} exceeds image extent {min(height, width)}")


def dark_channel(img: np.ndarray, window: int) -> np.ndarray:
    """Minimum over channels and a window x window patch around each pixel.

    The patch is border-clamped: coordinates outside the image are replaced
    by the nearest edge pixel.
    """
    img = as_image(img)
    _check_window(window, img.shape[0], img.shape[1])
    per_pixel_min = img.min(axis=2)
    if window == 1:
        return per_pixel_min
    return minimum_filter(per_pixel_min, size=window, mode="nearest")


def estimate_atmospheric_light(img: np.ndarray, airlight_frac: float = 0.001,
                               window: int = 15) -> np.ndarray:
    """Average the image over the brightest dark-channel positions.

    The number of positions is max(1, round(airlight_frac * pixels)). Ties in
    dark-channel value are broken by row-major pixel order, so the estimate is
    deterministic.
    """
    img = as_image(img)
    # DefogParams caps the fraction at 0.05; the op itself accepts any usable
    # fraction so the estimator can be exercised on tiny images directly.
    if not 0.0 < airlight_frac <= 1.0:
        raise ParameterError(
            f"airlight_frac must be in (0, 1], got {airlight_frac}")
    height, width = img.shape[:2]
    count = max(1, int(round(airlight_frac * height * width)))
    dark = dark_channel(img, window).ravel()
    order = np.argsort(-dark, kind="stable")[:count]
    flat = img.reshape(-1, 3)
    return flat[order].mean(axis=0)


def transmission_map(img: np.ndarray, airlight: np.ndarray, strength: float,
                     window: int) -> np.ndarray:
    """Per-pixel transmission 1 - strength * darkchannel(I / A), clamped to [0, 1]."""
    img = as_image(img)
    airlight = np.asarray(airlight, dtype=np.float64).reshape(3)
    if not 0.0 <= strength <= 1.0:
        raise ParameterError(f"strength must be in [0, 1], got {strength}")
    if np.any(airlight <= 0.0):
        raise DegenerateAtmosphereError(
            f"atmospheric light must be positive per channel, got {airlight}")
    _check_window(window, img.shape[0], img.shape[1])
    ratio_min = (img / airlight).min(axis=2)
    if window > 1:
        ratio_min = minimum_filter(ratio_min, size=window, mode="nearest")
    return np.clip(1.0 - strength * ratio_min, 0.0, 1.0)


def recover_scene(img: np.ndarray, airlight: np.ndarray, transmission: np.ndarray,
                  t_floor: float = 0.1) -> np.ndarray:
    """Invert the haze model: J = (I - A) / max(t, t_floor) + A, clamped."""
    img = as_image(img)
    airlight = np.asarray(airlight, dtype=np.float64).reshape(3)
    transmission = np.asarray(transmission, dtype=np.float64)
    if transmission.shape != img.shape[:2]:
        raise ValueError(
            f"transmission shape {transmission.shape} does not match image "
            f"{img.shape[:2]}")
    t = np.maximum(transmission, t_floor)
    return clamp01((img - airlight) / t[..., None] + airlight)


def defog(img: np.ndarray, params: DefogParams) -> np.ndarray:
    """Full defogging pass: dark channel, airlight, transmission, recovery."""
    img = as_image(img)
    if params.strength == 0.0:
        # t would be identically 1, but (I - A) + A is not bit-exact in
        # floats; strength 0 must be an exact identity.
        return img.copy()
    airlight = estimate_atmospheric_light(img, params.airlight_frac, params.window)
    if np.any(airlight <= 0.0):
        raise DegenerateAtmosphereError(
            "estimated atmospheric light has a non-positive channel; "
            "image is too dark to defog")
    t = transmission_map(img, airlight, params.strength, params.window)
    return recover_scene(img, airlight, t, params.t_floor)
