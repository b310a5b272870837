"""COCO-style average precision over per-frame detections.

The protocol is pinned so numbers are comparable across runs: detections are
globally sorted by score, matched greedily to the highest-IoU unmatched ground
truth of the same class within their frame, and precision-recall is integrated
at 101 evenly spaced recall points. mAP averages over classes present in the
ground truth and over the IoU threshold set, reported on a 0-100 scale.
"""

from __future__ import annotations

import numpy as np

from .boxes import iou
from .errors import MetricUndefinedError, ParameterError

DEFAULT_IOU_THRESHOLDS = tuple(np.arange(0.5, 0.96, 0.05).round(2))
RECALL_POINTS = np.linspace(0.0, 1.0, 101)


def _sorted_class_detections(frame_dets: dict, class_id: int):
    """Detections of one class across frames in deterministic score order.

    The sort key includes frame and box coordinates so the result does not
    depend on insertion order among equal scores.
    """
    pool = []
    for frame_id, dets in frame_dets.items():
        for det in dets:
            if det.class_id == class_id:
                pool.append((frame_id, det))
    pool.sort(key=lambda item: (-item[1].score, item[0]) + item[1].box.as_tuple())
    return pool


def average_precision(frame_dets: dict, frame_gts: dict, class_id: int,
                      iou_threshold: float) -> float:
    """AP for one class at one IoU threshold; 0 when the class has no ground truth."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ParameterError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    gt_boxes = {
        frame_id: [box for box, cid in gts if cid == class_id]
        for frame_id, gts in frame_gts.items()
    }
    num_gt = sum(len(boxes) for boxes in gt_boxes.values())
    if num_gt == 0:
        return 0.0

    pool = _sorted_class_detections(frame_dets, class_id)
    matched: dict[int, set] = {}
    tp = np.zeros(len(pool))
    for rank, (frame_id, det) in enumerate(pool):
        taken = matched.setdefault(frame_id, set())
        best_iou, best_idx = -1.0, -1
        for gt_idx, gt_box in enumerate(gt_boxes.get(frame_id, [])):
            if gt_idx in taken:
                continue
            overlap = iou(det.box, gt_box)
            # ties between ground-truth boxes go to the lowest index
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou, best_idx = overlap, gt_idx
        if best_idx >= 0:
            taken.add(best_idx)
            tp[rank] = 1.0

    if len(pool) == 0:
        return 0.0
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    recall = cum_tp / num_gt
    precision = cum_tp / (cum_tp + cum_fp)
    # 101-point interpolation: max precision among points at recall >= r.
    ap = 0.0
    for r in RECALL_POINTS:
        mask = recall >= r
        ap += float(precision[mask].max()) if mask.any() else 0.0
    return ap / len(RECALL_POINTS)


def mean_ap(frame_dets: dict, frame_gts: dict, class_ids=None,
            iou_thresholds=DEFAULT_IOU_THRESHOLDS) -> float:
    """Mean AP over ground-truth classes and IoU thresholds, scaled to 0-100.

    Classes absent from the ground truth are excluded from the average.
    Raises MetricUndefinedError when there is no ground truth at all.
    """
    if not iou_thresholds:
        raise ParameterError("iou_thresholds must be nonempty")
    present = sorted({cid for gts in frame_gts.values() for _, cid in gts})
    if not present:
        raise MetricUndefinedError("no ground truth boxes: mAP is undefined")
    if class_ids is not None:
        present = [cid for cid in sorted(set(class_ids)) if cid in present]
        if not present:
            raise MetricUndefinedError(
                "none of the requested classes appear in the ground truth")
    total = 0.0
    for class_id in present:
        for threshold in iou_thresholds:
            total += average_precision(frame_dets, frame_gts, class_id, threshold)
    return 100.0 * total / (len(present) * len(iou_thresholds))
