import numpy as np
import pytest

from train.config import TrainConfig
from tests.helpers import SMALL, TINY_MODEL, chirp


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))


@pytest.fixture
def small_cfg():
    return SMALL


@pytest.fixture
def tiny_model():
    return TINY_MODEL


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(spectral=SMALL, model=TINY_MODEL, steps=10, batch_size=2, segment_frames=6,
                       seed=3, checkpoint_every=5, log_every=5)


@pytest.fixture
def small_dataset():
    from train.data import Dataset
    return Dataset.from_waves([chirp(0.05, SMALL.sample_rate_hz, f0=200 + 40 * i, f1=500) for i in range(3)])
