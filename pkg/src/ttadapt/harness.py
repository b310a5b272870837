"""Continual-sequence runner, mix training, and the six-column metric report.

A run streams a domain sequence (clean source segment, corrupted target
segments, clean loopback segment) through a detector in one of four modes:

* ``frozen``: the given model, no updates, no filters.
* ``detector_adapt``: multi-teacher adaptation per frame, plain frames.
* ``image_adapt``: the given (mix-trained) model, no updates, no filters;
  the row differs from frozen only by the model handed in.
* ``bilevel``: multi-teacher adaptation plus per-frame filter search; the
  student trains on, and the EMA teacher is evaluated on, the filtered frame.

Metrics: overall pooled mAP, per-region mAPs (source / target / loopback),
their drop, and the unweighted mean of per-segment mAPs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adaptation import TeacherEnsemble, VotingConfig, adapt_step
from .corruption import MixPolicy, corrupt, sample_corruption
from .dataset import DatasetManifest
from .detector import DetectorModel, detect, init_model, sgd_step
from .errors import ParameterError
from .io import write_text_atomic
from .metrics import DEFAULT_IOU_THRESHOLDS, mean_ap
from .search import FilterSearchConfig, search_filter_params

MODES = ("frozen", "detector_adapt", "image_adapt", "bilevel")
METRICS_FORMAT_VERSION = 1
METRIC_COLUMNS = ("map", "map_source", "map_target", "map_loopback",
                  "map_drop", "map_overall")


def map_drop_between(map_source: float, map_target: float) -> float:
    """Source-minus-target drop, rounded at 1e-10 to cancel binary float noise.

    mAP values live on a 0.1-granular 0-100 scale, so differences like
    41.0 - 33.7 must come out as exactly 7.3 rather than 7.2999...97.
    """
    return round(map_source - map_target, 10)


@dataclass(frozen=True)
class RunMetrics:
    map: float
    map_source: float
    map_target: float
    map_loopback: float
    map_drop: float
    map_overall: float

    def __post_init__(self):
        for name in ("map", "map_source", "map_target", "map_loopback",
                     "map_overall"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ParameterError(f"{name} must be in [0, 100], got {value}")
        if not -100.0 <= self.map_drop <= 100.0:
            raise ParameterError(
                f"map_drop must be in [-100, 100], got {self.map_drop}")

    @classmethod
    def from_components(cls, map: float, map_source: float, map_target: float,
                        map_loopback: float, map_overall: float) -> "RunMetrics":
        """Build a row; the drop column is always derived, never supplied."""
        return cls(map=map, map_source=map_source, map_target=map_target,
                   map_loopback=map_loopback,
                   map_drop=map_drop_between(map_source, map_target),
                   map_overall=map_overall)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}


def check_sequence(manifest: DatasetManifest) -> None:
    """A runnable sequence has >= 3 segments, clean first and last, corrupted middle."""
    segments = manifest.segments
    if len(segments) < 3:
        raise ParameterError(f"sequence needs >= 3 segments, got {len(segments)}")
    if not segments[0].is_clean or not segments[-1].is_clean:
        raise ParameterError("first and last segments must be clean")
    if any(seg.is_clean for seg in segments[1:-1]):
        raise ParameterError("middle segments must be corrupted domains")
    if any(not seg.frame_ids for seg in segments):
        raise ParameterError("every segment must contain at least one frame")


def compute_metrics(frame_dets: dict, manifest: DatasetManifest,
                    iou_thresholds=DEFAULT_IOU_THRESHOLDS) -> RunMetrics:
    """Six-column metrics for one run over a valid domain sequence.

    ``map`` pools every frame; source/target/loopback pool the first, middle,
    and last segments respectively; ``map_overall`` is the unweighted mean of
    per-segment mAPs.
    """
    check_sequence(manifest)
    missing = [fid for fid in manifest.frame_ids if fid not in frame_dets]
    if missing:
        raise ParameterError(f"detections missing for frames {missing[:5]}")

    def pooled(frame_ids) -> float:
        dets = {fid: frame_dets[fid] for fid in frame_ids}
        gts = {fid: manifest.ground_truth[fid] for fid in frame_ids}
        return mean_ap(dets, gts, iou_thresholds=iou_thresholds)

    segments = manifest.segments
    target_ids = [fid for seg in segments[1:-1] for fid in seg.frame_ids]
    per_segment = [pooled(seg.frame_ids) for seg in segments]
    return RunMetrics.from_components(
        map=pooled(manifest.frame_ids),
        map_source=pooled(segments[0].frame_ids),
        map_target=pooled(target_ids),
        map_loopback=pooled(segments[-1].frame_ids),
        map_overall=float(np.mean(per_segment)),
    )


def mix_train(manifest: DatasetManifest, epochs: int, lr: float,
              policy: MixPolicy, grid_size: int = 8) -> DetectorModel:
    """Train the toy detector with per-image corruption sampled by the policy.

    Each epoch walks the manifest frames in order; every image is loaded
    clean, corrupted per a fresh draw from the policy's seeded generator, and
    used for one gradient step against its ground truth. Deterministic for a
    fixed policy seed.
    """
    if not manifest.frame_ids:
        raise ParameterError("training manifest has no frames")
    if epochs < 0:
        raise ParameterError(f"epochs must be >= 0, got {epochs}")
    rng = np.random.default_rng(policy.rng_seed)
    model = init_model(grid_size, manifest.num_classes)
    cache = {fid: manifest.load_frame(fid) for fid in manifest.frame_ids}
    for _ in range(epochs):
        for fid in manifest.frame_ids:
            kind, params = sample_corruption(policy, float(rng.random()), rng)
            img = corrupt(cache[fid], kind, params)
            model = sgd_step(model, img, manifest.ground_truth[fid], lr)
    return model


@dataclass(frozen=True)
class RunSettings:
    """Knobs for run_sequence; defaults match the pinned benchmark."""

    score_threshold: float = 0.15
    lr: float = 2.0
    momentum: float = 0.99
    voting: VotingConfig = VotingConfig()
    search: FilterSearchConfig = FilterSearchConfig()
    iou_thresholds: tuple = (0.2,)


def run_sequence(model: DetectorModel, manifest: DatasetManifest, mode: str,
                 settings: RunSettings | None = None):
    """Stream the sequence through the detector in the requested mode.

    Returns (RunMetrics, per-frame detections, final ensemble or None).
    Frames are processed strictly in manifest order; the output carries every
    frame id exactly once.
    """
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    check_sequence(manifest)
    settings = settings or RunSettings()
    if model.num_classes != manifest.num_classes:
        raise ParameterError(
            f"model has {model.num_classes} classes, dataset {manifest.num_classes}")

    frame_dets: dict[int, list] = {}
    ensemble = None
    if mode in ("detector_adapt", "bilevel"):
        ensemble = TeacherEnsemble.from_source(model, settings.momentum)

    for fid in manifest.frame_ids:
        frame = manifest.load_frame(fid)
        if mode in ("frozen", "image_adapt"):
            frame_dets[fid] = detect(model, frame, settings.score_threshold)
            continue
        filter_params = None
        eval_frame = frame
        if mode == "bilevel":
            filter_params = search_filter_params(frame, ensemble.fixed_teacher,
                                                 settings.search)
            eval_frame = filter_params.apply(frame)
        ensemble, _ = adapt_step(ensemble, frame, filter_params=filter_params,
                                 cfg=settings.voting, lr=settings.lr)
        frame_dets[fid] = detect(ensemble.ema_teacher, eval_frame,
                                 settings.score_threshold)

    metrics = compute_metrics(frame_dets, manifest, settings.iou_thresholds)
    return metrics, frame_dets, ensemble


def write_metrics_file(path: str | Path, mode: str, seed: int,
                       metrics: RunMetrics) -> None:
    """One JSON object per run, key-sorted so identical runs are byte-identical."""
    payload = {"version": METRICS_FORMAT_VERSION, "mode": mode, "seed": seed}
    payload.update(metrics.as_dict())
    write_text_atomic(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")


def read_metrics_file(path: str | Path) -> dict:
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != METRICS_FORMAT_VERSION:
        raise ValueError(f"unsupported metrics format version {payload.get('version')}")
    return payload


def render_report(rows) -> str:
    """Aligned text table, one row per run: mode then the six metric columns."""
    headers = ["method", "mAP", "mAP_source", "mAP_target", "mAP_loopback",
               "mAP_drop", "mAP_overall"]
    order = {mode: idx for idx, mode in enumerate(MODES)}
    rows = sorted(rows, key=lambda r: (order.get(r["mode"], len(MODES)), r["mode"]))
    table = [headers]
    for row in rows:
        table.append([row["mode"]] + [f"{row[c]:.1f}" for c in METRIC_COLUMNS])
    widths = [max(len(line[i]) for line in table) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip()
             for line in table]
    return "\n".join(lines) + "\n"
