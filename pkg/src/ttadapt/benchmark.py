"""The pinned synthetic benchmark: seeds, schedule, and training recipe.

Everything that the regression-style checks compare against lives here, so
"the benchmark" means one reproducible configuration: 64x64 frames, 3 classes,
an 8x8 detector grid, 40-frame segments scheduled clean, fog level 5,
low light 3.0, clean, and a fixed pair of source models (clean-trained and
mix-trained) from the same 120-image training set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .corruption import MixPolicy
from .dataset import DatasetManifest, synth_dataset
from .detector import DetectorModel
from .harness import RunSettings, mix_train

TRAIN_SEED = 20240
SEQUENCE_SEED = 31337
MIX_SEED = 977

CLEAN_POLICY = MixPolicy(p_fog=0.0, p_lowlight=0.0, p_clean=1.0, rng_seed=MIX_SEED)
MIX_POLICY = MixPolicy(rng_seed=MIX_SEED)


@dataclass(frozen=True)
class BenchmarkConfig:
    width: int = 64
    height: int = 64
    num_classes: int = 3
    grid_size: int = 8
    train_segments: int = 24
    train_frames_per_segment: int = 5
    epochs: int = 50
    lr: float = 2.0
    frames_per_segment: int = 40
    schedule: tuple = ("clean", "fog:5", "lowlight:3.0", "clean")


DEFAULT_BENCHMARK = BenchmarkConfig()


def build_training_manifest(out_dir: str | Path,
                            cfg: BenchmarkConfig = DEFAULT_BENCHMARK) -> DatasetManifest:
    """Clean training set: many short segments for scene diversity."""
    return synth_dataset(out_dir, seed=TRAIN_SEED, width=cfg.width, height=cfg.height,
                         frames_per_segment=cfg.train_frames_per_segment,
                         schedule=("clean",) * cfg.train_segments,
                         num_classes=cfg.num_classes)


def build_sequence_manifest(out_dir: str | Path,
                            cfg: BenchmarkConfig = DEFAULT_BENCHMARK) -> DatasetManifest:
    """The continual sequence: clean source, fog and low-light targets, clean loopback."""
    return synth_dataset(out_dir, seed=SEQUENCE_SEED, width=cfg.width, height=cfg.height,
                         frames_per_segment=cfg.frames_per_segment,
                         schedule=cfg.schedule, num_classes=cfg.num_classes)


def train_source_models(train_manifest: DatasetManifest,
                        cfg: BenchmarkConfig = DEFAULT_BENCHMARK):
    """Returns (clean-trained model, mix-trained model) for the four-mode runs."""
    clean_model = mix_train(train_manifest, epochs=cfg.epochs, lr=cfg.lr,
                            policy=CLEAN_POLICY, grid_size=cfg.grid_size)
    mix_model = mix_train(train_manifest, epochs=cfg.epochs, lr=cfg.lr,
                          policy=MIX_POLICY, grid_size=cfg.grid_size)
    return clean_model, mix_model


def model_for_mode(mode: str, clean_model: DetectorModel,
                   mix_model: DetectorModel) -> DetectorModel:
    """Image-level adaptation rows (image_adapt, bilevel) use the mix-trained model."""
    return mix_model if mode in ("image_adapt", "bilevel") else clean_model


def benchmark_settings() -> RunSettings:
    return RunSettings()
