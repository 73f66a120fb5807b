"""Shared fixtures: tiny networks, tiny datasets and seeded generators."""

import numpy as np
import pytest

from varda.data import SynthSpec, generate, save_dataset
from varda.networks import NetConfig, init_params
from varda.tensor import current_tape, set_default_dtype


@pytest.fixture(autouse=True)
def _float64_and_fresh_tape():
    """Run every test in 64-bit with an empty tape."""
    set_default_dtype("float64")
    current_tape().clear()
    yield
    set_default_dtype("float64")
    current_tape().clear()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """8×8 images, two encoder blocks: latent grid 2×2×2, n = 8."""
    return NetConfig(height=8, width=8, hidden=4, encoder_blocks=2, latent_channels=2)


@pytest.fixture
def tiny_params(tiny_config):
    return init_params(tiny_config)


@pytest.fixture
def tiny_spec():
    return SynthSpec(height=16, width=16, n_source=8, n_target_train=8, n_target_test=4, seed=3)


@pytest.fixture(scope="session")
def small_dataset():
    spec = SynthSpec(height=16, width=16, n_source=8, n_target_train=8, n_target_test=4, seed=3)
    return generate(spec)


@pytest.fixture(scope="session")
def small_net_config():
    return NetConfig(height=16, width=16, hidden=4, encoder_blocks=2, latent_channels=1)


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory, small_dataset):
    path = tmp_path_factory.mktemp("dataset")
    spec = SynthSpec(height=16, width=16, n_source=8, n_target_train=8, n_target_test=4, seed=3)
    save_dataset(small_dataset, path, spec)
    return path
