"""Shared fixtures for the test suite."""
import numpy as np
import pytest

from core_model import derive_params


@pytest.fixture
def rng():
    return np.random.default_rng(20211)


@pytest.fixture
def params_994():
    """The n=994, k=14, α=1, δ=3 code used throughout the evaluation."""
    return derive_params(994, 14, 1.0, 3)
