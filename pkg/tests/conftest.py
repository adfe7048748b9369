"""Shared fixtures and the --runslow switch"""
import numpy as np
import pytest

from src.domain.models import Stream


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_point_stream():
    return Stream(points=[[0.0, 0.0], [1.0, 2.0]])


@pytest.fixture
def random_stream(rng):
    def make(n: int = 6, d: int = 2, scale: float = 0.5) -> Stream:
        return Stream(points=scale * rng.normal(size=(n, d)))
    return make
