import pytest

from ttadapt.boxes import (BBox, Detection, iou, iou_matrix, nms,
                           read_detection_records, read_ground_truth_records,
                           write_detection_records, write_ground_truth_records)
from ttadapt.errors import ParameterError


def brute_force_nms(detections, iou_threshold):
    """Oracle: plain greedy loop, no vectorization, no per-class grouping tricks."""
    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].score, i))
    kept = []
    for idx in order:
        candidate = detections[idx]
        suppressed = False
        for keeper in kept:
            if keeper.class_id == candidate.class_id and \
                    iou(keeper.box, candidate.box) >= iou_threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(candidate)
    return kept


def random_detections(rng, count, num_classes=2, span=20.0):
    dets = []
    for _ in range(count):
        x1, y1 = rng.uniform(0, span, 2)
        w, h = rng.uniform(1.0, span / 2, 2)
        dets.append(Detection(box=BBox(x1, y1, x1 + w, y1 + h),
                              class_id=int(rng.integers(0, num_classes)),
                              score=float(rng.uniform(0, 1))))
    return dets


class TestBBox:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 1)
        with pytest.raises(ValueError):
            BBox(0, 2, 1, 1)

    def test_area(self):
        assert BBox(1, 1, 4, 3).area == 6.0

    def test_detection_validation(self):
        box = BBox(0, 0, 1, 1)
        with pytest.raises(ValueError):
            Detection(box=box, class_id=-1, score=0.5)
        with pytest.raises(ValueError):
            Detection(box=box, class_id=0, score=1.5)


class TestIoU:
    def test_identity(self):
        box = BBox(2, 3, 7, 9)
        assert iou(box, box) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0

    def test_frozen_overlap(self):
        # intersection 1, union 7
        assert iou(BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)) == pytest.approx(
            0.14285714285714285, abs=1e-15)

    def test_symmetry_and_range(self, rng):
        for _ in range(100):
            a, b = random_detections(rng, 2)
            va, vb = iou(a.box, b.box), iou(b.box, a.box)
            assert va == vb
            assert 0.0 <= va <= 1.0

    def test_matrix_matches_scalar(self, rng):
        dets_a = random_detections(rng, 5)
        dets_b = random_detections(rng, 4)
        matrix = iou_matrix([d.box for d in dets_a], [d.box for d in dets_b])
        for i, a in enumerate(dets_a):
            for j, b in enumerate(dets_b):
                assert matrix[i, j] == pytest.approx(iou(a.box, b.box), abs=1e-12)


class TestNMS:
    def test_single_detection_unchanged(self):
        det = Detection(box=BBox(0, 0, 2, 2), class_id=0, score=0.7)
        assert nms([det], 0.5) == [det]

    def test_duplicate_keeps_higher_score(self):
        box = BBox(0, 0, 2, 2)
        low = Detection(box=box, class_id=0, score=0.8)
        high = Detection(box=box, class_id=0, score=0.9)
        assert nms([low, high], 0.5) == [high]

    def test_different_classes_not_suppressed(self):
        box = BBox(0, 0, 2, 2)
        a = Detection(box=box, class_id=0, score=0.9)
        b = Detection(box=box, class_id=1, score=0.8)
        assert nms([a, b], 0.5) == [a, b]

    def test_matches_brute_force_oracle(self, rng):
        for trial in range(300):
            count = int(rng.integers(0, 7))
            dets = random_detections(rng, count, num_classes=3)
            threshold = float(rng.uniform(0.05, 1.0))
            assert nms(dets, threshold) == brute_force_nms(dets, threshold)

    def test_output_is_subset_and_separated(self, rng):
        dets = random_detections(rng, 12, num_classes=2)
        kept = nms(dets, 0.4)
        assert all(k in dets for k in kept)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                if a.class_id == b.class_id:
                    assert iou(a.box, b.box) < 0.4

    def test_rejects_bad_threshold(self):
        with pytest.raises(ParameterError):
            nms([], 0.0)


class TestRecords:
    def test_detection_round_trip(self, tmp_path, rng):
        frames = {0: random_detections(rng, 3), 5: random_detections(rng, 2), 7: []}
        path = tmp_path / "dets.txt"
        write_detection_records(path, frames)
        loaded = read_detection_records(path)
        assert loaded == {0: frames[0], 5: frames[5]}

    def test_ground_truth_round_trip(self, tmp_path):
        frames = {1: [(BBox(0, 0, 3, 3), 2), (BBox(4, 4, 9, 8), 0)], 2: []}
        path = tmp_path / "gt.txt"
        write_ground_truth_records(path, frames)
        assert read_ground_truth_records(path) == {1: frames[1]}

    def test_field_count_validated(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1 2 3\n")
        with pytest.raises(ValueError, match="fields"):
            read_detection_records(path)

    def test_full_precision_preserved(self, tmp_path):
        det = Detection(box=BBox(0.1234567890123456, 1.0, 2.0, 3.0),
                        class_id=1, score=1 / 3)
        path = tmp_path / "one.txt"
        write_detection_records(path, {3: [det]})
        assert read_detection_records(path)[3][0] == det
