from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from shotmem.backends import MockBackend, MockBackendConfig
from shotmem.conditioning import LatentShape
from shotmem.config import RunConfig
from shotmem.providers import MockProviders

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def street_musician_text() -> str:
    return (DATA_DIR / "street_musician.json").read_text(encoding="utf-8")


@pytest.fixture
def providers() -> MockProviders:
    return MockProviders()


@pytest.fixture
def backend() -> MockBackend:
    return MockBackend(MockBackendConfig())


@pytest.fixture
def small_shape() -> LatentShape:
    return LatentShape(c=4, f=4, h=4, w=4, s=4)


@pytest.fixture
def run_config() -> RunConfig:
    return RunConfig(seed=17)


def unit_vectors(rng: np.random.Generator, n: int, dim: int) -> list[np.ndarray]:
    vecs = rng.normal(size=(n, dim))
    return [v / np.linalg.norm(v) for v in vecs]
