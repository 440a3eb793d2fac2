import math
from pathlib import Path

import numpy as np
import pytest

from isokernel.special_fn import SphereGeometry
from isokernel.spectrum import BernsteinFunction, DensityFamily, LevyMeasureSpec, LevyModel

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"


@pytest.fixture
def s2():
    return SphereGeometry(3)


@pytest.fixture
def heat3():
    return LevyModel.heat(3)


@pytest.fixture
def atom_model(s2):
    return LevyModel(geom=s2, a=0.0, nu=LevyMeasureSpec(atoms=((math.pi / 2, 1.0),)))


@pytest.fixture
def mixed_model(s2):
    nu = LevyMeasureSpec(atoms=((1.0, 2.0),), family=DensityFamily.uniform(0.5))
    return LevyModel(geom=s2, a=0.5, nu=nu)


@pytest.fixture
def power_model(s2):
    return LevyModel(geom=s2, a=0.0, nu=LevyMeasureSpec(family=DensityFamily.power(1.0, 1.5)))


@pytest.fixture
def stable_half():
    return BernsteinFunction.stable(0.5)


@pytest.fixture
def drift_cp():
    return BernsteinFunction.drift_cp(0.5, [(0.2, 1.0)])


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(12345)))


@pytest.fixture
def models_dir():
    return MODELS
