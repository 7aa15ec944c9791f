import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lhsep.assemblage import SettingSearch
from lhsep.scenarios import build_bell_counterexample


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture(scope="session")
def bell():
    return build_bell_counterexample()


@pytest.fixture(scope="session")
def coarse():
    """Small grid with refinement; enough for random-state properties."""
    return SettingSearch(n_theta=9, n_phi=8, refine_tolerance=1e-4)
