"""Derivative-free search for filter parameters at test time.

Cyclic coordinate descent over (defog strength, gamma, contrast, exposure):
each coordinate gets a golden-section line search over its range, maximizing a
self-supervised confidence objective (sum of the scorer's strongest cell
scores on the filtered frame). The identity setting is always a candidate, so
the result never scores below it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .adaptation import FilterParams
from .defog import DefogParams
from .detector import DetectorModel, score_cells
from .errors import ParameterError

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

SEARCH_ORDER = ("defog_strength", "gamma", "contrast", "exposure")


@dataclass(frozen=True)
class FilterSearchConfig:
    defog_range: tuple = (0.0, 1.0)
    gamma_range: tuple = (0.5, 2.0)
    contrast_range: tuple = (0.0, 1.0)
    exposure_range: tuple = (-1.0, 1.0)
    evals_per_param: int = 14
    cycles: int = 1
    top_k: int = 10
    defog_airlight_frac: float = 0.001
    defog_window: int = 15
    defog_t_floor: float = 0.1

    def __post_init__(self):
        for name in ("defog_range", "gamma_range", "contrast_range", "exposure_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ParameterError(f"{name} must be a nonempty interval, got {lo, hi}")
        if self.evals_per_param < 1:
            raise ParameterError(
                f"evals_per_param must be >= 1, got {self.evals_per_param}")
        if self.cycles < 1:
            raise ParameterError(f"cycles must be >= 1, got {self.cycles}")
        if self.top_k < 1:
            raise ParameterError(f"top_k must be >= 1, got {self.top_k}")


def confidence_objective(scorer: DetectorModel, img: np.ndarray, top_k: int = 10) -> float:
    """Sum of the top_k cell/class scores: a proxy for detection confidence."""
    scores = np.sort(score_cells(scorer, img).ravel())
    return float(scores[-top_k:].sum())


def golden_section_max(fn, lo: float, hi: float, num_evals: int):
    """Golden-section search maximizing fn on [lo, hi] with num_evals calls.

    Returns (best_x, best_value) over every point actually evaluated, so the
    result is monotone in num_evals even for non-unimodal objectives.
    """
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1 = fn(x1)
    if num_evals < 2:
        return x1, f1
    f2 = fn(x2)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for _ in range(num_evals - 2):
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fn(x2)
        for x, f in ((x1, f1), (x2, f2)):
            if f > best_f:
                best_x, best_f = x, f
    return best_x, best_f


def _with_value(params: FilterParams, name: str, value: float,
                cfg: FilterSearchConfig) -> FilterParams:
    if name == "defog_strength":
        defog = DefogParams(strength=value, airlight_frac=cfg.defog_airlight_frac,
                            window=cfg.defog_window, t_floor=cfg.defog_t_floor)
        return replace(params, defog=defog)
    return replace(params, pixel=replace(params.pixel, **{name: value}))


def search_filter_params(frame: np.ndarray, scorer: DetectorModel,
                         cfg: FilterSearchConfig | None = None) -> FilterParams:
    """Find filter parameters that maximize the scorer's confidence on the frame.

    Coordinates are searched in the fixed order defog strength, gamma,
    contrast, exposure; a coordinate's new value is accepted only when it
    improves on the best objective seen so far. Deterministic for fixed inputs.
    """
    cfg = cfg or FilterSearchConfig()
    ranges = {
        "defog_strength": cfg.defog_range,
        "gamma": cfg.gamma_range,
        "contrast": cfg.contrast_range,
        "exposure": cfg.exposure_range,
    }

    def objective(params: FilterParams) -> float:
        return confidence_objective(scorer, params.apply(frame), cfg.top_k)

    best = FilterParams.identity()
    best_score = objective(best)
    for _ in range(cfg.cycles):
        for name in SEARCH_ORDER:
            lo, hi = ranges[name]

            def line(value: float) -> float:
                return objective(_with_value(best, name, value, cfg))

            x, fx = golden_section_max(line, lo, hi, cfg.evals_per_param)
            if fx > best_score:
                best = _with_value(best, name, x, cfg)
                best_score = fx
    return best
