import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from holesim import Grid, gaussian_packet


@pytest.fixture
def grid256():
    return Grid(256, 40.0)


@pytest.fixture
def grid1024():
    return Grid(1024, 40.0)


@pytest.fixture
def packet_pair(grid256):
    """Two unit-width packets centered one width either side of the origin."""
    left = gaussian_packet(grid256, -1.0, 1.0, label="psi_a")
    right = gaussian_packet(grid256, 1.0, 1.0, label="psi_b")
    return left, right


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
