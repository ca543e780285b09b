import time

import numpy as np
import pytest

from voxradar.framefilter import Pooling, TrainConfig, init_model, train
from voxradar.synthetic import classifier_dataset

ACCEPTANCE_LINES: list[str] = []

CLASSIFIER_FRAMES = 1000
SPLIT_SEED = 123


@pytest.fixture(scope="session")
def classifier_data():
    """Synthetic regular/ghost inputs with a seeded 80/20 train/test split."""
    t0 = time.perf_counter()
    x, y = classifier_dataset(CLASSIFIER_FRAMES, seed=0)
    order = np.random.default_rng(SPLIT_SEED).permutation(len(y))
    cut = int(0.8 * len(y))
    return {"train": (x[order[:cut]], y[order[:cut]]), "test": (x[order[cut:]], y[order[cut:]]),
            "seconds": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def trained_max(classifier_data):
    """(model, history, seconds) for max pooling on the training split."""
    xtr, ytr = classifier_data["train"]
    t0 = time.perf_counter()
    model, history = train(init_model(Pooling.MAX, seed=0), list(zip(xtr, ytr)), TrainConfig(seed=0))
    return model, history, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
