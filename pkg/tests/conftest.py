import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def log_dir(tmp_path):
    path = tmp_path / 'logs'
    path.mkdir()
    return str(path)
