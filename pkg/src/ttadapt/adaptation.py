"""Detector-level test-time adaptation: EMA mean teacher, fixed teacher, voting.

The ensemble carries a student, an EMA teacher tracking it, and a frozen copy
of the source model. Pseudo labels come from a vote between the two teachers:
detections the teachers agree on are fused and kept at a low confidence bar,
lone detections survive only when highly confident. This suppresses
hallucinated boxes from a drifted EMA teacher while keeping its genuinely
confident finds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .boxes import BBox, Detection, iou_matrix, nms
from .defog import DefogParams
from .detector import DetectorModel, detect, sgd_step
from .errors import ParameterError
from .image import PixelFilterParams, apply_filter_chain
from .io import write_text_atomic

CHECKPOINT_FORMAT_VERSION = 1
TEACHER_DETECT_THRESHOLD = 0.05


@dataclass(frozen=True)
class FilterParams:
    """Image-level adaptation state: tone parameters plus optional defogging."""

    pixel: PixelFilterParams = field(default_factory=PixelFilterParams)
    defog: DefogParams | None = None

    @classmethod
    def identity(cls) -> "FilterParams":
        return cls()

    def apply(self, img: np.ndarray) -> np.ndarray:
        return apply_filter_chain(img, self.pixel, self.defog)


@dataclass(frozen=True)
class VotingConfig:
    iou_match: float = 0.5
    agree_keep_score: float = 0.1
    solo_keep_score: float = 0.8

    def __post_init__(self):
        for name in ("iou_match", "agree_keep_score", "solo_keep_score"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ParameterError(f"{name} must be in (0, 1], got {value}")


@dataclass(frozen=True)
class TeacherEnsemble:
    student: DetectorModel
    ema_teacher: DetectorModel
    fixed_teacher: DetectorModel
    momentum: float = 0.99
    step: int = 0

    def __post_init__(self):
        for other in (self.ema_teacher, self.fixed_teacher):
            if (other.grid_size != self.student.grid_size
                    or other.num_classes != self.student.num_classes
                    or other.feature_spec != self.student.feature_spec):
                raise ParameterError("ensemble models must share architecture")
        if not 0.0 <= self.momentum <= 1.0:
            raise ParameterError(f"momentum must be in [0, 1], got {self.momentum}")

    @classmethod
    def from_source(cls, model: DetectorModel, momentum: float = 0.99) -> "TeacherEnsemble":
        """Start adaptation from a source-trained model; all three copies equal."""
        return cls(student=replace(model, params=model.params.copy()),
                   ema_teacher=replace(model, params=model.params.copy()),
                   fixed_teacher=replace(model, params=model.params.copy()),
                   momentum=momentum)


def ema_update(ensemble: TeacherEnsemble) -> TeacherEnsemble:
    """Move the EMA teacher toward the student: theta <- m*theta + (1-m)*student."""
    if ensemble.ema_teacher.params.shape != ensemble.student.params.shape:
        raise ValueError("ema teacher and student parameter shapes differ")
    m = ensemble.momentum
    updated = m * ensemble.ema_teacher.params + (1.0 - m) * ensemble.student.params
    return replace(ensemble, ema_teacher=replace(ensemble.ema_teacher, params=updated))


def _fuse(a: Detection, b: Detection) -> Detection:
    """Score-weighted average of the two boxes; score is the plain mean."""
    total = a.score + b.score
    if total > 0.0:
        wa, wb = a.score / total, b.score / total
    else:
        wa = wb = 0.5
    ax, bx = a.box.as_tuple(), b.box.as_tuple()
    fused_box = BBox(*(wa * ac + wb * bc for ac, bc in zip(ax, bx)))
    return Detection(box=fused_box, class_id=a.class_id,
                     score=(a.score + b.score) / 2.0)


def vote_pseudo_labels(ema_dets, fixed_dets, cfg: VotingConfig):
    """Combine the two teachers' detections into robust pseudo labels.

    Per class: greedily pair detections across the teachers by descending IoU
    (pairs below ``iou_match`` never match). Pairs are fused and kept when the
    fused score reaches ``agree_keep_score``; unpaired detections from either
    teacher are kept only at ``solo_keep_score`` or above. The survivors then
    pass class-wise NMS at ``iou_match``.
    """
    classes = sorted({d.class_id for d in ema_dets} | {d.class_id for d in fixed_dets})
    voted = []
    for class_id in classes:
        ema_c = [d for d in ema_dets if d.class_id == class_id]
        fixed_c = [d for d in fixed_dets if d.class_id == class_id]
        overlaps = iou_matrix([d.box for d in ema_c], [d.box for d in fixed_c])
        pairs = [(overlaps[i, j], i, j)
                 for i in range(len(ema_c)) for j in range(len(fixed_c))
                 if overlaps[i, j] >= cfg.iou_match]
        pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
        used_ema: set[int] = set()
        used_fixed: set[int] = set()
        for _, i, j in pairs:
            if i in used_ema or j in used_fixed:
                continue
            used_ema.add(i)
            used_fixed.add(j)
            fused = _fuse(ema_c[i], fixed_c[j])
            if fused.score >= cfg.agree_keep_score:
                voted.append(fused)
        for i, det in enumerate(ema_c):
            if i not in used_ema and det.score >= cfg.solo_keep_score:
                voted.append(det)
        for j, det in enumerate(fixed_c):
            if j not in used_fixed and det.score >= cfg.solo_keep_score:
                voted.append(det)
    return nms(voted, cfg.iou_match)


def adapt_step(ensemble: TeacherEnsemble, frame: np.ndarray,
               filter_params: FilterParams | None = None,
               cfg: VotingConfig | None = None, lr: float = 0.5,
               teacher_threshold: float = TEACHER_DETECT_THRESHOLD):
    """One continual-adaptation step on a frame.

    Both teachers detect on the plain frame and vote; the student takes one
    gradient step toward the voted labels on the filtered frame (or the plain
    frame when no filter is given); the EMA teacher then tracks the student.
    The fixed teacher is never modified.

    Returns (updated ensemble, pseudo labels).
    """
    cfg = cfg or VotingConfig()
    ema_dets = detect(ensemble.ema_teacher, frame, teacher_threshold)
    fixed_dets = detect(ensemble.fixed_teacher, frame, teacher_threshold)
    pseudo = vote_pseudo_labels(ema_dets, fixed_dets, cfg)
    student_input = filter_params.apply(frame) if filter_params is not None else frame
    targets = [(d.box, d.class_id) for d in pseudo]
    student = sgd_step(ensemble.student, student_input, targets, lr)
    updated = ema_update(replace(ensemble, student=student, step=ensemble.step + 1))
    return updated, pseudo


def save_checkpoint(path: str | Path, ensemble: TeacherEnsemble) -> None:
    """Versioned text checkpoint; parameters as hex floats for bit-exact round trips."""
    def dump(model: DetectorModel):
        return [value.hex() for value in model.params]

    payload = {
        "version": CHECKPOINT_FORMAT_VERSION,
        "grid_size": ensemble.student.grid_size,
        "num_classes": ensemble.student.num_classes,
        "feature_spec": ensemble.student.feature_spec,
        "momentum": ensemble.momentum.hex() if isinstance(ensemble.momentum, float)
                    else float(ensemble.momentum).hex(),
        "step": ensemble.step,
        "student": dump(ensemble.student),
        "ema_teacher": dump(ensemble.ema_teacher),
        "fixed_teacher": dump(ensemble.fixed_teacher),
    }
    write_text_atomic(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")


def load_checkpoint(path: str | Path) -> TeacherEnsemble:
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(
            f"unsupported checkpoint format version {payload.get('version')}")

    def model(key: str) -> DetectorModel:
        return DetectorModel(grid_size=payload["grid_size"],
                             num_classes=payload["num_classes"],
                             params=np.array([float.fromhex(v) for v in payload[key]]),
                             feature_spec=payload["feature_spec"])

    return TeacherEnsemble(student=model("student"), ema_teacher=model("ema_teacher"),
                           fixed_teacher=model("fixed_teacher"),
                           momentum=float.fromhex(payload["momentum"]),
                           step=payload["step"])
