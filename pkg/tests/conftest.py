import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from divtsp._backend import available_backends  # noqa: E402
from divtsp.tsplib import Instance, load_instance  # noqa: E402

BACKENDS = available_backends()


@pytest.fixture(scope="session")
def eil51():
    return load_instance("eil51")


@pytest.fixture
def square():
    return Instance("square", np.array([[0, 0], [0, 10], [10, 10], [10, 0]], float), 40)


@pytest.fixture(params=sorted(BACKENDS))
def kern(request):
    return BACKENDS[request.param]


def random_instance(rng, n, scale=100):
    coords = rng.integers(0, scale, size=(n, 2)).astype(float)
    return Instance(f"rand{n}", coords)
