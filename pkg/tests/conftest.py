import numpy as np
import pytest

from ttadapt import benchmark
from ttadapt.dataset import render_frame, synth_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def image_corpus():
    """24 diverse images in [0, 1]: scenes, noise, gradients, flats, extremes."""
    gen = np.random.default_rng(777)
    corpus = []
    for _ in range(8):
        corpus.append(gen.random((48, 48, 3)))
    for value in (0.0, 0.2, 0.5, 0.9, 1.0):
        corpus.append(np.full((32, 32, 3), value))
    ramp = np.linspace(0.0, 1.0, 40)
    corpus.append(np.broadcast_to(ramp[:, None, None], (40, 40, 3)).copy())
    corpus.append(np.broadcast_to(ramp[None, :, None], (40, 40, 3)).copy())
    from ttadapt.dataset import _smooth_background, _spawn_objects
    for seed in range(9):
        scene_rng = np.random.default_rng(1000 + seed)
        background = _smooth_background(scene_rng, 64, 64)
        objects = _spawn_objects(scene_rng, 64, 64, 3)
        img, _ = render_frame(background, objects)
        corpus.append(img)
    assert len(corpus) >= 20
    return corpus


@pytest.fixture(scope="session")
def bench_dirs(tmp_path_factory):
    return tmp_path_factory.mktemp("bench")


@pytest.fixture(scope="session")
def train_manifest(bench_dirs):
    return benchmark.build_training_manifest(bench_dirs / "train")


@pytest.fixture(scope="session")
def sequence_manifest(bench_dirs):
    return benchmark.build_sequence_manifest(bench_dirs / "seq")


@pytest.fixture(scope="session")
def source_models(train_manifest):
    """(clean-trained, mix-trained) pair; trained once per session."""
    return benchmark.train_source_models(train_manifest)


@pytest.fixture(scope="session")
def tiny_manifest(tmp_path_factory):
    """A small 3-segment sequence for fast harness tests."""
    return synth_dataset(tmp_path_factory.mktemp("tiny"), seed=42, width=48, height=48,
                         frames_per_segment=4, schedule=("clean", "fog:4", "clean"),
                         num_classes=3)
