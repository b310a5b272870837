"""Synthetic fog and low-light corruption, plus the training mix policy.

Fog uses the scattering model I = J*exp(-beta*d) + A*(1 - exp(-beta*d)) with a
radial depth proxy; low light raises values to a power > 1. Both keep outputs
inside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .image import as_image, clamp01

FOG_LEVELS = range(10)
LOWLIGHT_RANGE = (1.5, 5.0)


@dataclass(frozen=True)
class FogParams:
    """Fog severity as a discrete level 0..9; beta = 0.01 * level + 0.05."""

    level: int
    atmosphere: float = 0.5

    def __post_init__(self):
        if self.level not in FOG_LEVELS:
            raise ParameterError(f"fog level must be in 0..9, got {self.level}")
        if not 0.0 <= self.atmosphere <= 1.0:
            raise ParameterError(
                f"atmosphere must be in [0, 1], got {self.atmosphere}")

    @property
    def beta(self) -> float:
        return 0.01 * self.level + 0.05


@dataclass(frozen=True)
class LowLightParams:
    """Darkening exponent in [1.5, 5]; output is value ** exponent."""

    exponent: float

    def __post_init__(self):
        lo, hi = LOWLIGHT_RANGE
        if not lo <= self.exponent <= hi:
            raise ParameterError(
                f"exponent must be in [{lo}, {hi}], got {self.exponent}")


@dataclass(frozen=True)
class MixPolicy:
    """Per-image corruption probabilities for training (defaults 1/3 each)."""

    p_fog: float = 1.0 / 3.0
    p_lowlight: float = 1.0 / 3.0
    p_clean: float = 1.0 / 3.0
    rng_seed: int = 0

    def __post_init__(self):
        probs = (self.p_fog, self.p_lowlight, self.p_clean)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ParameterError(f"probabilities must be >= 0 and sum to 1, got {probs}")


def depth_value(rho: float, width: int, height: int) -> float:
    """Depth proxy for a pixel at center distance rho, clamped below at 0.

    The raw value -0.04*rho + sqrt(max(height, width)) goes negative for
    pixels beyond sqrt(max)/0.04 from center; negative depth would brighten
    past the physical model, so it is clamped.
    """
    return max(0.0, -0.04 * rho + np.sqrt(max(height, width)))


def depth_proxy(width: int, height: int) -> np.ndarray:
    """Per-pixel depth map from the radial proxy, shape (height, width).

    Distances are measured in pixels from the geometric center
    ((width-1)/2, (height-1)/2).
    """
    if width < 1 or height < 1:
        raise ParameterError(f"dimensions must be >= 1, got {width}x{height}")
    cy = (height - 1) / 2.0
    cx = (width - 1) / 2.0
    ys = np.arange(height, dtype=np.float64)[:, None] - cy
    xs = np.arange(width, dtype=np.float64)[None, :] - cx
    rho = np.hypot(ys, xs)
    return np.maximum(0.0, -0.04 * rho + np.sqrt(max(height, width)))


def apply_scattering(clean: np.ndarray, atmosphere: float,
                     transmission: np.ndarray) -> np.ndarray:
    """Forward haze model I = J*t + A*(1-t) for a given transmission map."""
    clean = as_image(clean)
    t = np.asarray(transmission, dtype=np.float64)
    if t.shape != clean.shape[:2]:
        raise ValueError(
            f"transmission shape {t.shape} does not match image {clean.shape[:2]}")
    return clamp01(clean * t[..., None] + atmosphere * (1.0 - t[..., None]))


def synthesize_fog(clean: np.ndarray, params: FogParams) -> np.ndarray:
    """Fog the image with the radial depth proxy and the level's beta."""
    clean = as_image(clean)
    height, width = clean.shape[:2]
    t = np.exp(-params.beta * depth_proxy(width, height))
    return apply_scattering(clean, params.atmosphere, t)


def synthesize_low_light(clean: np.ndarray, params: LowLightParams) -> np.ndarray:
    """Darken the image by raising every channel to the exponent."""
    clean = as_image(clean)
    return clamp01(np.power(clean, params.exponent))


def sample_corruption(policy: MixPolicy, draw: float, rng: np.random.Generator):
    """Map a uniform draw to a corruption kind and sample its parameters.

    Returns ("fog", FogParams), ("lowlight", LowLightParams) or ("clean", None).
    The fog level is uniform over 0..9 and the low-light exponent uniform over
    [1.5, 5], both taken from ``rng`` so a seeded generator reproduces the
    whole corruption sequence.
    """
    if not 0.0 <= draw < 1.0:
        raise ParameterError(f"draw must be in [0, 1), got {draw}")
    if draw < policy.p_fog:
        level = int(rng.integers(0, 10))
        return "fog", FogParams(level=level)
    if draw < policy.p_fog + policy.p_lowlight:
        lo, hi = LOWLIGHT_RANGE
        return "lowlight", LowLightParams(exponent=float(rng.uniform(lo, hi)))
    return "clean", None


def corrupt(clean: np.ndarray, kind: str, params) -> np.ndarray:
    """Apply a sampled corruption; "clean" returns an untouched copy."""
    if kind == "fog":
        return synthesize_fog(clean, params)
    if kind == "lowlight":
        return synthesize_low_light(clean, params)
    if kind == "clean":
        return as_image(clean).copy()
    raise ParameterError(f"unknown corruption kind {kind!r}")
