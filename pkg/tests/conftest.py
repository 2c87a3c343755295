import numpy as np
import pytest

from oocpll.config import TrainConfig
from oocpll.data.generation import build_corrupted_splits
from oocpll.training.trainer import run_training
from oocpll.utils.random import RandomStreams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    return TrainConfig(
        n_classes=4,
        dim=2,
        n_per_class=40,
        separation=6.0,
        open_classes=2,
        n_val_per_class=10,
        n_test_per_class=20,
        q=0.3,
        tau1=0.2,
        tau2=0.4,
        hidden_sizes=(8,),
        T_warmup=3,
        phi=2,
        T_max=6,
        batch_size=32,
        seed=0,
    )


@pytest.fixture
def small_splits(small_config):
    return build_corrupted_splits(small_config, RandomStreams.from_seed(small_config.seed).data)


@pytest.fixture
def config_file(tmp_path):
    def write(text: str):
        path = tmp_path / "experiment.env"
        path.write_text(text)
        return path

    return write


@pytest.fixture(scope="session")
def desk_seeds():
    return list(range(5))


@pytest.fixture(scope="session")
def desk_runs(desk_seeds):
    """Full-method desk-scale runs for five seeds, each with the splits it trained on."""
    runs = []
    for seed in desk_seeds:
        config = TrainConfig(seed=seed)
        splits = build_corrupted_splits(config, RandomStreams.from_seed(seed).data)
        runs.append((config, splits, run_training(config, splits.train, splits.test)))
    return runs
