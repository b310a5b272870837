"""Detection primitives: boxes, IoU, greedy NMS, and the records file format.

Records files are line-delimited text: ``frame_id class_id x1 y1 x2 y2 score``
for detections and the same without the score for ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .io import write_text_atomic


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box with x1 < x2 and y1 < y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"box must have positive area, got {self}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Detection:
    box: BBox
    class_id: int
    score: float

    def __post_init__(self):
        object.__setattr__(self, "class_id", int(self.class_id))
        object.__setattr__(self, "score", float(self.score))
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU, shape (len(a), len(b))."""
    if not boxes_a or not boxes_b:
        return np.zeros((len(boxes_a), len(boxes_b)))
    a = np.array([box.as_tuple() for box in boxes_a], dtype=np.float64)
    b = np.array([box.as_tuple() for box in boxes_b], dtype=np.float64)
    ix = (np.minimum(a[:, None, 2], b[None, :, 2])
          - np.maximum(a[:, None, 0], b[None, :, 0]))
    iy = (np.minimum(a[:, None, 3], b[None, :, 3])
          - np.maximum(a[:, None, 1], b[None, :, 1]))
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


def nms(detections, iou_threshold: float):
    """Greedy per-class suppression, highest score first.

    A detection survives iff its IoU with every already-kept detection of the
    same class is below the threshold. Ties in score keep input order, so the
    result is deterministic.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ParameterError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, i))
    kept: list[Detection] = []
    for idx in order:
        det = detections[idx]
        if all(iou(det.box, k.box) < iou_threshold
               for k in kept if k.class_id == det.class_id):
            kept.append(det)
    return kept


def _format_box(box: BBox) -> str:
    return f"{box.x1!r} {box.y1!r} {box.x2!r} {box.y2!r}"


def _parse_box(fields) -> BBox:
    return BBox(*(float(v) for v in fields))


def write_detection_records(path: str | Path, frames: dict) -> None:
    """Write per-frame detections, one line per detection, sorted for determinism."""
    lines = []
    for frame_id in sorted(frames):
        for det in frames[frame_id]:
            lines.append(
                f"{frame_id} {det.class_id} {_format_box(det.box)} {det.score!r}")
    write_text_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


def read_detection_records(path: str | Path) -> dict:
    frames: dict[int, list[Detection]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 fields, got {len(fields)}")
        frame_id = int(fields[0])
        det = Detection(box=_parse_box(fields[2:6]), class_id=int(fields[1]),
                        score=float(fields[6]))
        frames.setdefault(frame_id, []).append(det)
    return frames


def write_ground_truth_records(path: str | Path, frames: dict) -> None:
    """Write per-frame ground truth as (BBox, class_id) pairs, score omitted."""
    lines = []
    for frame_id in sorted(frames):
        for box, class_id in frames[frame_id]:
            lines.append(f"{frame_id} {class_id} {_format_box(box)}")
    write_text_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


def read_ground_truth_records(path: str | Path) -> dict:
    frames: dict[int, list] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(fields)}")
        frame_id = int(fields[0])
        frames.setdefault(frame_id, []).append((_parse_box(fields[2:6]), int(fields[1])))
    return frames
