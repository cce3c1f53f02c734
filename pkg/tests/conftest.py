import numpy as np
import pytest

from bokehkit.synth import make_demo_assets


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def demo_assets(tmp_path_factory):
    """Tiny synthetic asset catalog shared across synthesizer tests."""
    root = tmp_path_factory.mktemp("assets")
    make_demo_assets(root, seed=7, n_backgrounds=2, n_foregrounds=3, size=64)
    return root
