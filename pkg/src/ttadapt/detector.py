"""Trainable toy detector: per-grid-cell logistic scoring on handcrafted features.

Each cell of a grid_size x grid_size partition is described by 14 numbers
(mean and population std per channel, plus an 8-bin luminance histogram) and
scored per class by an independent logistic head. Detections are the cell
rectangles themselves; there is no box regression. Training is full-frame
gradient descent on per-cell binary cross-entropy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .boxes import BBox, Detection, iou, nms
from .errors import ParameterError
from .image import as_image, luminance
from .io import write_text_atomic

FEATURE_SPEC = "mean3+std3+lumhist8"
FEATURE_DIM = 14
HIST_BINS = 8
POSITIVE_IOU = 0.3
DETECT_NMS_IOU = 0.5

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DetectorModel:
    """Flat parameter vector of per-class weights and bias over cell features."""

    grid_size: int
    num_classes: int
    params: np.ndarray
    feature_spec: str = FEATURE_SPEC

    def __post_init__(self):
        if self.grid_size < 1:
            raise ParameterError(f"grid_size must be >= 1, got {self.grid_size}")
        if self.num_classes < 1:
            raise ParameterError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.feature_spec != FEATURE_SPEC:
            raise ParameterError(f"unknown feature_spec {self.feature_spec!r}")
        expected = self.num_classes * (FEATURE_DIM + 1)
        params = np.asarray(self.params, dtype=np.float64)
        if params.shape != (expected,):
            raise ParameterError(
                f"params must have shape ({expected},), got {params.shape}")
        object.__setattr__(self, "params", params)

    @property
    def weights(self) -> np.ndarray:
        """View of shape (num_classes, FEATURE_DIM)."""
        return self.params.reshape(self.num_classes, FEATURE_DIM + 1)[:, :FEATURE_DIM]

    @property
    def biases(self) -> np.ndarray:
        return self.params.reshape(self.num_classes, FEATURE_DIM + 1)[:, FEATURE_DIM]


def init_model(grid_size: int, num_classes: int) -> DetectorModel:
    """Zero-initialized model: every cell scores 0.5 for every class."""
    return DetectorModel(grid_size=grid_size, num_classes=num_classes,
                         params=np.zeros(num_classes * (FEATURE_DIM + 1)))


def cell_edges(extent: int, grid_size: int) -> np.ndarray:
    """Integer partition of ``extent`` pixels into grid_size near-equal spans."""
    return (np.arange(grid_size + 1) * extent) // grid_size


def cell_box(row: int, col: int, grid_size: int, width: int, height: int) -> BBox:
    xs = cell_edges(width, grid_size)
    ys = cell_edges(height, grid_size)
    return BBox(float(xs[col]), float(ys[row]), float(xs[col + 1]), float(ys[row + 1]))


def extract_features(img: np.ndarray, cell: tuple[int, int], grid_size: int) -> np.ndarray:
    """14-number descriptor of one cell: channel means, channel stds, luminance histogram."""
    img = as_image(img)
    row, col = cell
    if not (0 <= row < grid_size and 0 <= col < grid_size):
        raise ParameterError(f"cell {cell} outside {grid_size}x{grid_size} grid")
    ys = cell_edges(img.shape[0], grid_size)
    xs = cell_edges(img.shape[1], grid_size)
    patch = img[ys[row]:ys[row + 1], xs[col]:xs[col + 1]]
    means = patch.mean(axis=(0, 1))
    stds = patch.std(axis=(0, 1))
    lum = luminance(patch).ravel()
    bins = np.minimum((lum * HIST_BINS).astype(np.int64), HIST_BINS - 1)
    hist = np.bincount(bins, minlength=HIST_BINS) / lum.size
    return np.concatenate([means, stds, hist])


def features_all_cells(img: np.ndarray, grid_size: int) -> np.ndarray:
    """Features for every cell in row-major order, shape (grid_size**2, FEATURE_DIM)."""
    feats = np.empty((grid_size * grid_size, FEATURE_DIM))
    for row in range(grid_size):
        for col in range(grid_size):
            feats[row * grid_size + col] = extract_features(img, (row, col), grid_size)
    return feats


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def score_cells(model: DetectorModel, img: np.ndarray) -> np.ndarray:
    """Per-cell per-class logistic scores, shape (grid_size**2, num_classes)."""
    feats = features_all_cells(img, model.grid_size)
    return _sigmoid(feats @ model.weights.T + model.biases)


def detect(model: DetectorModel, img: np.ndarray, score_threshold: float):
    """Emit a cell-rectangle Detection for every cell/class score >= threshold.

    Survivors pass class-wise NMS at IoU 0.5 (a no-op for the disjoint cells of
    one grid, but part of the contract for any detection source).
    """
    img = as_image(img)
    height, width = img.shape[:2]
    scores = score_cells(model, img)
    dets = []
    for idx in range(model.grid_size ** 2):
        row, col = divmod(idx, model.grid_size)
        box = cell_box(row, col, model.grid_size, width, height)
        for class_id in range(model.num_classes):
            if scores[idx, class_id] >= score_threshold:
                dets.append(Detection(box=box, class_id=class_id,
                                      score=float(scores[idx, class_id])))
    return nms(dets, DETECT_NMS_IOU)


def _cell_labels(model: DetectorModel, width: int, height: int, targets) -> np.ndarray:
    """Binary labels: cell positive for class k iff IoU with a class-k target >= 0.3."""
    labels = np.zeros((model.grid_size ** 2, model.num_classes))
    for idx in range(model.grid_size ** 2):
        row, col = divmod(idx, model.grid_size)
        box = cell_box(row, col, model.grid_size, width, height)
        for target_box, class_id in targets:
            if class_id < model.num_classes and iou(box, target_box) >= POSITIVE_IOU:
                labels[idx, class_id] = 1.0
    return labels


def bce_loss(model: DetectorModel, img: np.ndarray, targets) -> float:
    """Mean binary cross-entropy over all cells and classes (the training loss)."""
    img = as_image(img)
    feats = features_all_cells(img, model.grid_size)
    labels = _cell_labels(model, img.shape[1], img.shape[0], targets)
    logits = feats @ model.weights.T + model.biases
    # log(1 + exp(-|z|)) formulation avoids overflow for large |logits|
    loss = np.maximum(logits, 0.0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))
    return float(loss.mean())


def sgd_step(model: DetectorModel, img: np.ndarray, targets, lr: float) -> DetectorModel:
    """One full-frame gradient step of the BCE loss toward the given targets.

    Targets are (BBox, class_id) pairs. Returns a new model; the input is
    untouched.
    """
    if lr < 0:
        raise ParameterError(f"lr must be >= 0, got {lr}")
    img = as_image(img)
    feats = features_all_cells(img, model.grid_size)
    labels = _cell_labels(model, img.shape[1], img.shape[0], targets)
    probs = _sigmoid(feats @ model.weights.T + model.biases)
    grad_logits = (probs - labels) / labels.size
    grad_w = grad_logits.T @ feats
    grad_b = grad_logits.sum(axis=0)
    grad = np.hstack([grad_w, grad_b[:, None]]).ravel()
    return replace(model, params=model.params - lr * grad)


def save_model(path: str | Path, model: DetectorModel) -> None:
    """Versioned text dump; float parameters stored as hex for exact round trips."""
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "grid_size": model.grid_size,
        "num_classes": model.num_classes,
        "feature_spec": model.feature_spec,
        "params": [value.hex() for value in model.params],
    }
    write_text_atomic(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")


def load_model(path: str | Path) -> DetectorModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {payload.get('version')}")
    params = np.array([float.fromhex(v) for v in payload["params"]])
    return DetectorModel(grid_size=payload["grid_size"],
                         num_classes=payload["num_classes"],
                         params=params, feature_spec=payload["feature_spec"])
