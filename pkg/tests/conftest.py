import numpy as np
import pytest

from chainbath.instances import random_initial_state, random_io_model


def make_instance(seed, N, **kwargs):
    """Seeded admissible instance plus a generic initial state."""
    rng = np.random.default_rng(seed)
    io, chain, omap = random_io_model(rng, N, **kwargs)
    init = random_initial_state(rng, io.N)
    return io, chain, omap, init


@pytest.fixture
def small_instance():
    return make_instance(1234, 4)
