import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sqglab.eigenbasis import DiskBasis, DomainSpec, RectangleBasis

settings.register_profile("sqglab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("sqglab")


@pytest.fixture(autouse=True)
def _quiet_runtime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture(scope="session")
def square16():
    return RectangleBasis(DomainSpec.rectangle(), 16, 16)


@pytest.fixture(scope="session")
def square32():
    return RectangleBasis(DomainSpec.rectangle(), 32, 32)


@pytest.fixture(scope="session")
def rect():
    return RectangleBasis(DomainSpec.rectangle(2.0, 1.3), 12, 9)


@pytest.fixture(scope="session")
def disk():
    return DiskBasis(DomainSpec.disk(1.0), 6, 6)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


PI = math.pi
RNG = np.random.default_rng
