import numpy as np
import pytest

from dichotomy_checker.config import reload_config
from dichotomy_checker.system.fixtures import get_fixture
from dichotomy_checker.system.sequence import Interval


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    monkeypatch.delenv("DICHOTOMY_TOL", raising=False)
    reload_config()
    yield
    reload_config()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def s1_cert():
    """S1 with its exact constants, claimed on [0, 50]."""
    return get_fixture("S1").certificate(Interval.finite(0, 50))


@pytest.fixture
def s2b_cert():
    return get_fixture("S2b").certificate(Interval.finite(1, 50))
