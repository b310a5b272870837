"""Continual test-time adaptation pipeline with adjustable image filters.

The package pairs an image-level adaptation module (defogging plus gamma,
contrast, and exposure filters with searchable parameters) with a
detector-level one (a mean-teacher ensemble with a frozen second teacher and
pseudo-label voting), evaluated on synthetic continual domain-shift sequences
with a COCO-style mAP suite.
"""

from .adaptation import (FilterParams, TeacherEnsemble, VotingConfig, adapt_step,
                         ema_update, load_checkpoint, save_checkpoint,
                         vote_pseudo_labels)
from .boxes import BBox, Detection, iou, nms
from .corruption import (FogParams, LowLightParams, MixPolicy, depth_proxy,
                         sample_corruption, synthesize_fog, synthesize_low_light)
from .defog import (DefogParams, dark_channel, defog, estimate_atmospheric_light,
                    recover_scene, transmission_map)
from .detector import (DetectorModel, detect, extract_features, init_model,
                       load_model, save_model, sgd_step)
from .errors import DegenerateAtmosphereError, MetricUndefinedError, ParameterError
from .harness import (RunMetrics, RunSettings, compute_metrics, mix_train,
                      run_sequence)
from .image import (PixelFilterParams, apply_contrast, apply_exposure,
                    apply_filter_chain, apply_gamma, enhanced_luminance, luminance)
from .io import read_image, write_image
from .metrics import average_precision, mean_ap
from .search import FilterSearchConfig, golden_section_max, search_filter_params

__version__ = "0.1.0"

__all__ = [
    "BBox", "DefogParams", "DegenerateAtmosphereError", "Detection",
    "DetectorModel", "FilterParams", "FilterSearchConfig", "FogParams",
    "LowLightParams", "MetricUndefinedError", "MixPolicy", "ParameterError",
    "PixelFilterParams", "RunMetrics", "RunSettings", "TeacherEnsemble",
    "VotingConfig", "adapt_step", "apply_contrast", "apply_exposure",
    "apply_filter_chain", "apply_gamma", "average_precision", "compute_metrics",
    "dark_channel", "defog", "depth_proxy", "detect", "ema_update",
    "enhanced_luminance", "estimate_atmospheric_light", "extract_features",
    "golden_section_max", "init_model", "iou", "load_checkpoint", "load_model",
    "luminance", "mean_ap", "mix_train", "nms", "read_image", "recover_scene",
    "run_sequence", "sample_corruption", "save_checkpoint", "save_model",
    "search_filter_params", "sgd_step", "synthesize_fog", "synthesize_low_light",
    "transmission_map", "vote_pseudo_labels", "write_image",
]
