"""Shared fixtures. The tiny dataset keeps unit tests fast; anything
statistically demanding builds its own inputs."""

import numpy as np
import pytest

from codesign import DatasetConfig, PulseStreamConfig, build_dataset


@pytest.fixture(scope="session")
def tiny_dataset():
    """400-window dataset, enough signal for smoke-level training."""
    config = PulseStreamConfig(stream_length=2 * 32 * 400, rng_seed=7)
    return build_dataset(config, total_windows=400, seed=1)


@pytest.fixture(scope="session")
def tiny_dataset_config():
    """Config that regenerates tiny_dataset (for campaign-level tests)."""
    return DatasetConfig(
        stream=PulseStreamConfig(stream_length=2 * 32 * 400, rng_seed=7),
        total_windows=400,
        split_seed=1,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
