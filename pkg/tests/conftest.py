import numpy as np
import pytest

from aefuse.niqe import niqe_fit
from aefuse.synthetic import pristine_corpus, scene


@pytest.fixture(scope="session")
def nss_model():
    return niqe_fit(pristine_corpus(), patch_size=32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def natural():
    """A fixed 128x128 synthetic scene standing in for a natural image."""
    return scene(np.random.default_rng(7), 128)
