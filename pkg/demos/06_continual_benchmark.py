"""The full continual-adaptation story in one table.

Trains the two pinned source models (clean-only and mix), runs a continual
sequence through all four modes, and prints the aligned six-column table.
The evaluation sequence here is half the length of the pinned benchmark and
the filter search slightly coarsened, so the whole script takes about a
minute; the full pinned benchmark lives in the test suite
(tests/test_acceptance.py, criterion 8).
"""

import tempfile
import time
from pathlib import Path

from ttadapt import benchmark
from ttadapt.dataset import synth_dataset
from ttadapt.harness import (RunSettings, render_report, run_sequence,
                             write_metrics_file)
from ttadapt.search import FilterSearchConfig


def main():
    root = Path(tempfile.mkdtemp(prefix="ttadapt_bench_"))
    print(f"Working under {root}")

    train = benchmark.build_training_manifest(root / "train")
    sequence = synth_dataset(root / "seq", seed=benchmark.SEQUENCE_SEED,
                             frames_per_segment=20,
                             schedule=benchmark.DEFAULT_BENCHMARK.schedule)
    print(f"{len(train.frame_ids)} training frames; sequence of "
          f"{len(sequence.frame_ids)} frames over "
          f"{[seg.domain for seg in sequence.segments]}")

    start = time.time()
    clean_model, mix_model = benchmark.train_source_models(train)
    print(f"Trained clean-only and mix models in {time.time() - start:.0f}s")

    settings = RunSettings(search=FilterSearchConfig(evals_per_param=8))
    rows = []
    for mode in ("frozen", "detector_adapt", "image_adapt", "bilevel"):
        model = benchmark.model_for_mode(mode, clean_model, mix_model)
        t0 = time.time()
        metrics, _, _ = run_sequence(model, sequence, mode, settings)
        print(f"  {mode:15s} done in {time.time() - t0:4.1f}s")
        write_metrics_file(root / f"metrics_{mode}.json", mode,
                           benchmark.SEQUENCE_SEED, metrics)
        row = {"mode": mode}
        row.update(metrics.as_dict())
        rows.append(row)

    print()
    print(render_report(rows))
    print("Reading the table: the frozen source model collapses on the fog and")
    print("low-light segments (mAP_target, mAP_drop). Detector adaptation")
    print("claws some back, mix training more, and the bi-level combination")
    print("(mix training + teacher voting + per-frame filter search) recovers")
    print("most of the loss while holding the clean loopback segment.")


if __name__ == "__main__":
    main()
