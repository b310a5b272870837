import numpy as np
import pytest
from dataclasses import replace

from ttadapt.boxes import BBox
from ttadapt.detector import (FEATURE_DIM, DetectorModel, bce_loss, cell_box,
                              detect, extract_features, features_all_cells,
                              init_model, load_model, save_model, score_cells,
                              sgd_step)
from ttadapt.errors import ParameterError


def finite_difference_gradient(model, img, targets, h=1e-5):
    """Oracle: central differences of the loss on every parameter."""
    grad = np.empty_like(model.params)
    for idx in range(len(model.params)):
        plus = model.params.copy()
        plus[idx] += h
        minus = model.params.copy()
        minus[idx] -= h
        loss_plus = bce_loss(replace(model, params=plus), img, targets)
        loss_minus = bce_loss(replace(model, params=minus), img, targets)
        grad[idx] = (loss_plus - loss_minus) / (2 * h)
    return grad


def analytic_gradient(model, img, targets):
    """Recovered through the public API: a unit-lr step moves by exactly -grad."""
    stepped = sgd_step(model, img, targets, lr=1.0)
    return model.params - stepped.params


def random_model(rng, grid_size=4, num_classes=3, scale=1.0):
    params = rng.normal(0.0, scale, num_classes * (FEATURE_DIM + 1))
    return DetectorModel(grid_size=grid_size, num_classes=num_classes, params=params)


def random_targets(rng, width, height, num_classes, count):
    targets = []
    for _ in range(count):
        x1 = float(rng.uniform(0, width - 8))
        y1 = float(rng.uniform(0, height - 8))
        w, h = rng.uniform(4, 12, 2)
        targets.append((BBox(x1, y1, min(x1 + w, width), min(y1 + h, height)),
                        int(rng.integers(0, num_classes))))
    return targets


class TestFeatures:
    def test_constant_cell(self):
        img = np.full((16, 16, 3), 0.4)
        feats = extract_features(img, (1, 2), 4)
        assert feats[:3] == pytest.approx([0.4] * 3, abs=1e-12)
        assert feats[3:6] == pytest.approx([0.0] * 3, abs=1e-12)
        hist = feats[6:]
        assert hist.sum() == pytest.approx(1.0)
        assert hist[int(0.4 * 8)] == 1.0

    def test_black_cell(self):
        img = np.zeros((8, 8, 3))
        feats = extract_features(img, (0, 0), 2)
        assert feats[:6] == pytest.approx([0.0] * 6, abs=1e-12)
        assert feats[6] == 1.0 and feats[7:].sum() == 0.0

    def test_checkerboard_population_stats(self):
        img = np.zeros((8, 8, 3))
        img[::2, ::2] = 1.0
        img[1::2, 1::2] = 1.0
        feats = extract_features(img, (0, 0), 1)
        assert feats[:3] == pytest.approx([0.5] * 3, abs=1e-12)
        assert feats[3:6] == pytest.approx([0.5] * 3, abs=1e-12)

    def test_all_cells_matches_single(self, rng):
        img = rng.random((12, 12, 3))
        feats = features_all_cells(img, 3)
        for row in range(3):
            for col in range(3):
                single = extract_features(img, (row, col), 3)
                assert np.array_equal(feats[row * 3 + col], single)

    def test_rejects_cell_outside_grid(self, rng):
        with pytest.raises(ParameterError):
            extract_features(rng.random((8, 8, 3)), (4, 0), 4)


class TestDetect:
    def test_zero_model_scores_half(self, rng):
        model = init_model(4, 2)
        scores = score_cells(model, rng.random((16, 16, 3)))
        assert np.all(scores == 0.5)

    def test_unattainable_threshold_empty(self, rng):
        model = random_model(rng)
        assert detect(model, rng.random((16, 16, 3)), 1.0) == []

    def test_matches_independent_rescoring(self, rng):
        # oracle: per-cell logistic recomputed with plain loops
        model = random_model(rng, grid_size=3)
        img = rng.random((9, 9, 3))
        dets = detect(model, img, 0.5)
        weights, biases = model.weights, model.biases
        expected = []
        for row in range(3):
            for col in range(3):
                feats = extract_features(img, (row, col), 3)
                for class_id in range(model.num_classes):
                    z = float(feats @ weights[class_id] + biases[class_id])
                    score = 1.0 / (1.0 + np.exp(-z))
                    if score >= 0.5:
                        expected.append((row, col, class_id, score))
        assert len(dets) == len(expected)
        by_key = {(d.box.y1, d.box.x1, d.class_id): d.score for d in dets}
        for row, col, class_id, score in expected:
            box = cell_box(row, col, 3, 9, 9)
            assert by_key[(box.y1, box.x1, class_id)] == pytest.approx(score,
                                                                       abs=1e-9)

    def test_boxes_tile_the_image(self):
        boxes = [cell_box(r, c, 4, 17, 13) for r in range(4) for c in range(4)]
        assert min(b.x1 for b in boxes) == 0.0
        assert max(b.x2 for b in boxes) == 17.0
        assert min(b.y1 for b in boxes) == 0.0
        assert max(b.y2 for b in boxes) == 13.0
        total = sum(b.area for b in boxes)
        assert total == pytest.approx(17 * 13)


class TestSgdStep:
    def test_zero_lr_is_identity(self, rng):
        model = random_model(rng)
        img = rng.random((16, 16, 3))
        stepped = sgd_step(model, img, [], 0.0)
        assert np.array_equal(stepped.params, model.params)

    def test_empty_targets_push_scores_down(self, rng):
        model = init_model(4, 2)
        img = rng.random((16, 16, 3))
        stepped = sgd_step(model, img, [], lr=1.0)
        assert np.all(stepped.biases < 0.0)
        after = score_cells(stepped, img)
        assert np.all(after < 0.5)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(404)
        worst = 0.0
        for _ in range(5):
            model = random_model(rng, grid_size=3, scale=0.8)
            img = rng.random((12, 12, 3))
            targets = random_targets(rng, 12, 12, model.num_classes,
                                     int(rng.integers(0, 4)))
            fd = finite_difference_gradient(model, img, targets)
            analytic = analytic_gradient(model, img, targets)
            worst = max(worst, float(np.max(np.abs(fd - analytic))))
        assert worst < 1e-4

    def test_loss_decreases_on_constant_targets(self, rng):
        model = init_model(4, 3)
        img = rng.random((16, 16, 3))
        targets = random_targets(rng, 16, 16, 3, 3)
        losses = []
        for _ in range(30):
            losses.append(bce_loss(model, img, targets))
            model = sgd_step(model, img, targets, lr=1.0)
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_input_model_not_mutated(self, rng):
        model = random_model(rng)
        snapshot = model.params.copy()
        img = rng.random((16, 16, 3))
        sgd_step(model, img, random_targets(rng, 16, 16, 3, 2), lr=2.0)
        assert np.array_equal(model.params, snapshot)


class TestModelIO:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        model = random_model(rng, grid_size=5, num_classes=4)
        path = tmp_path / "model.json"
        save_model(path, model)
        loaded = load_model(path)
        assert loaded.grid_size == model.grid_size
        assert loaded.num_classes == model.num_classes
        assert np.array_equal(loaded.params, model.params)

    def test_rejects_wrong_param_length(self):
        with pytest.raises(ParameterError):
            DetectorModel(grid_size=4, num_classes=2, params=np.zeros(7))
