import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)


@pytest.fixture(autouse=True)
def _isolate_env_seed(monkeypatch):
    # the CLI honors DRBENCH_SEED; a stray value would break determinism checks
    monkeypatch.delenv("DRBENCH_SEED", raising=False)
