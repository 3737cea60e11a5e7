"""
Shared pytest fixtures.

Puts the project root on sys.path (the scripts do the same) and forces a
non-interactive matplotlib backend.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use('Agg')

import numpy as np
import pytest
from hypothesis import settings

project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.append(str(project_root))

from src.data_sources.scene_synth import SceneProfile, make_split
from tests.builders import square_scene

settings.register_profile('bench', deadline=None, max_examples=200)
settings.load_profile('bench')


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def square():
    return square_scene()


@pytest.fixture(scope='session')
def camouflaged_scenes():
    return make_split(SceneProfile.CAMOUFLAGED, 3, (16, 16), base_seed=100)


@pytest.fixture(scope='session')
def fine_scenes():
    return make_split(SceneProfile.FINE_STRUCTURE, 3, (16, 16), base_seed=200)


@pytest.fixture(scope='session')
def salient_scenes():
    return make_split(SceneProfile.SALIENT, 3, (16, 16), base_seed=300)
