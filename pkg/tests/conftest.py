import numpy as np
import pytest

from hvifem.mesh import build_uniform_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def meshes():
    cache = {}

    def get(level, semipermeable="bottom"):
        key = (level, semipermeable)
        if key not in cache:
            cache[key] = build_uniform_mesh(level, semipermeable)
        return cache[key]

    return get
