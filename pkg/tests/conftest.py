import numpy as np
import pytest
from hypothesis import settings

from rotorspec import rotor

settings.register_profile("suite", deadline=None, max_examples=25)
settings.load_profile("suite")

# B chosen so the first orientation gap of the default potential at beta = 1
# lands on 11 cm^-1; shared by the spectrum-side tests
B_FIT = 5.503275318502903


@pytest.fixture(scope="session")
def model_beta1():
    return rotor.RotorModel.create(B=B_FIT, beta=1.0, Jmax=8)


@pytest.fixture(scope="session")
def system_beta1(model_beta1):
    return rotor.diagonalize(model_beta1)


@pytest.fixture(scope="session")
def levels_beta1(system_beta1):
    return rotor.classify_levels(system_beta1, max_energy=80.0)
