import numpy as np
import pytest

from ttadapt.boxes import Detection
from ttadapt.corruption import MixPolicy
from ttadapt.dataset import synth_dataset
from ttadapt.detector import init_model
from ttadapt.errors import ParameterError
from ttadapt.harness import (RunMetrics, RunSettings, check_sequence,
                             compute_metrics, map_drop_between, mix_train,
                             read_metrics_file, render_report, run_sequence,
                             write_metrics_file)
from ttadapt.search import FilterSearchConfig


def perfect_detections(manifest):
    return {
        fid: [Detection(box=box, class_id=cid, score=0.9)
              for box, cid in manifest.ground_truth[fid]]
        for fid in manifest.frame_ids
    }


class TestDropArithmetic:
    def test_decimal_rows_exact(self):
        rows = [(41.0, 33.7, 7.3), (38.1, 34.3, 3.8),
                (42.3, 36.8, 5.5), (42.5, 38.3, 4.2)]
        for source, target, drop in rows:
            assert map_drop_between(source, target) == drop

    def test_drop_always_derived(self):
        metrics = RunMetrics.from_components(map=50.0, map_source=60.0,
                                             map_target=40.0, map_loopback=55.0,
                                             map_overall=52.0)
        assert metrics.map_drop == 20.0
        assert metrics.map_drop == map_drop_between(metrics.map_source,
                                                    metrics.map_target)

    def test_fields_serialize_in_column_order(self):
        metrics = RunMetrics.from_components(1.0, 2.0, 3.0, 4.0, 5.0)
        assert list(metrics.as_dict()) == ["map", "map_source", "map_target",
                                           "map_loopback", "map_drop",
                                           "map_overall"]

    def test_rejects_out_of_scale_values(self):
        with pytest.raises(ParameterError):
            RunMetrics.from_components(101.0, 50.0, 40.0, 50.0, 50.0)


class TestComputeMetrics:
    def test_perfect_detector_scores_100_everywhere(self, tiny_manifest):
        metrics = compute_metrics(perfect_detections(tiny_manifest), tiny_manifest)
        assert metrics.map == 100.0
        assert metrics.map_source == 100.0
        assert metrics.map_target == 100.0
        assert metrics.map_loopback == 100.0
        assert metrics.map_drop == 0.0
        assert metrics.map_overall == 100.0

    def test_identical_segments_symmetric(self, tmp_path):
        manifest = synth_dataset(tmp_path, seed=50, frames_per_segment=3,
                                 schedule=("clean", "fog:0", "clean"))
        dets = perfect_detections(manifest)
        # drop every other detection uniformly: columns stay equal
        for fid in dets:
            dets[fid] = dets[fid][::2]
        metrics = compute_metrics(dets, manifest)
        assert metrics.map_drop == pytest.approx(
            metrics.map_source - metrics.map_target, abs=1e-9)

    def test_requires_every_frame(self, tiny_manifest):
        dets = perfect_detections(tiny_manifest)
        dets.pop(tiny_manifest.frame_ids[0])
        with pytest.raises(ParameterError, match="missing"):
            compute_metrics(dets, tiny_manifest)

    def test_sequence_shape_validated(self, tmp_path):
        flat = synth_dataset(tmp_path / "flat", seed=3, frames_per_segment=2,
                             schedule=("clean", "clean", "clean"))
        with pytest.raises(ParameterError):
            check_sequence(flat)
        short = synth_dataset(tmp_path / "short", seed=3, frames_per_segment=2,
                              schedule=("clean", "fog:1"))
        with pytest.raises(ParameterError):
            check_sequence(short)


class TestMixTrain:
    def test_zero_epochs_returns_initial_model(self, tiny_manifest):
        model = mix_train(tiny_manifest, epochs=0, lr=1.0,
                          policy=MixPolicy(rng_seed=0), grid_size=4)
        assert np.array_equal(model.params, init_model(4, 3).params)

    def test_deterministic_for_fixed_seed(self, tiny_manifest):
        kwargs = dict(epochs=2, lr=1.0, policy=MixPolicy(rng_seed=8), grid_size=4)
        a = mix_train(tiny_manifest, **kwargs)
        b = mix_train(tiny_manifest, **kwargs)
        assert np.array_equal(a.params, b.params)

    def test_policy_seed_changes_result(self, tiny_manifest):
        a = mix_train(tiny_manifest, epochs=2, lr=1.0,
                      policy=MixPolicy(rng_seed=1), grid_size=4)
        b = mix_train(tiny_manifest, epochs=2, lr=1.0,
                      policy=MixPolicy(rng_seed=2), grid_size=4)
        assert not np.array_equal(a.params, b.params)


class TestRunSequence:
    def test_frozen_is_pure(self, tiny_manifest):
        model = mix_train(tiny_manifest, epochs=3, lr=2.0,
                          policy=MixPolicy(p_fog=0, p_lowlight=0, p_clean=1,
                                           rng_seed=0), grid_size=4)
        first = run_sequence(model, tiny_manifest, "frozen")
        second = run_sequence(model, tiny_manifest, "frozen")
        assert first[0] == second[0]
        assert first[1] == second[1]

    def test_streams_all_frames_in_order(self, tiny_manifest):
        model = init_model(4, 3)
        _, frame_dets, _ = run_sequence(model, tiny_manifest, "frozen")
        assert list(frame_dets) == list(tiny_manifest.frame_ids)

    def test_image_adapt_equals_frozen_path(self, tiny_manifest):
        model = mix_train(tiny_manifest, epochs=2, lr=2.0,
                          policy=MixPolicy(rng_seed=5), grid_size=4)
        frozen = run_sequence(model, tiny_manifest, "frozen")
        image = run_sequence(model, tiny_manifest, "image_adapt")
        assert frozen[0] == image[0]

    def test_adaptive_mode_returns_ensemble(self, tiny_manifest):
        model = init_model(4, 3)
        _, _, ensemble = run_sequence(model, tiny_manifest, "detector_adapt")
        assert ensemble is not None
        assert ensemble.step == len(tiny_manifest.frame_ids)
        assert np.array_equal(ensemble.fixed_teacher.params, model.params)

    def test_bilevel_streams_all_frames_in_order(self, tiny_manifest):
        model = mix_train(tiny_manifest, epochs=1, lr=1.0,
                          policy=MixPolicy(rng_seed=2), grid_size=4)
        fast = RunSettings(search=FilterSearchConfig(evals_per_param=3))
        _, frame_dets, ensemble = run_sequence(model, tiny_manifest, "bilevel",
                                               fast)
        assert list(frame_dets) == list(tiny_manifest.frame_ids)
        assert np.array_equal(ensemble.fixed_teacher.params, model.params)

    def test_rejects_unknown_mode(self, tiny_manifest):
        with pytest.raises(ParameterError, match="mode"):
            run_sequence(init_model(4, 3), tiny_manifest, "warp")

    def test_rejects_class_mismatch(self, tiny_manifest):
        with pytest.raises(ParameterError, match="classes"):
            run_sequence(init_model(4, 5), tiny_manifest, "frozen")


class TestMetricsFiles:
    def test_round_trip(self, tmp_path):
        metrics = RunMetrics.from_components(41.0, 41.0, 33.7, 48.7, 24.2)
        path = tmp_path / "metrics.json"
        write_metrics_file(path, "frozen", 7, metrics)
        row = read_metrics_file(path)
        assert row["mode"] == "frozen"
        assert row["seed"] == 7
        assert row["map_drop"] == 7.3

    def test_byte_identical_rewrites(self, tmp_path):
        metrics = RunMetrics.from_components(50.5, 60.25, 40.125, 55.0, 52.0)
        write_metrics_file(tmp_path / "a.json", "bilevel", 3, metrics)
        write_metrics_file(tmp_path / "b.json", "bilevel", 3, metrics)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_report_table_shape(self, tmp_path):
        rows = []
        for mode, source, target in [("frozen", 41.0, 33.7),
                                     ("bilevel", 42.5, 38.3)]:
            metrics = RunMetrics.from_components(40.0, source, target, 50.0, 30.0)
            path = tmp_path / f"{mode}.json"
            write_metrics_file(path, mode, 0, metrics)
            rows.append(read_metrics_file(path))
        table = render_report(rows)
        lines = table.strip().splitlines()
        assert lines[0].split() == ["method", "mAP", "mAP_source", "mAP_target",
                                    "mAP_loopback", "mAP_drop", "mAP_overall"]
        assert lines[1].startswith("frozen")
        assert lines[2].startswith("bilevel")
        assert "7.3" in lines[1] and "4.2" in lines[2]
