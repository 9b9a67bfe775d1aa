import numpy as np
import pytest

from anisostable.rng import RngHandle


@pytest.fixture
def handle():
    return RngHandle(seed=20240817, stream_id=0)


def rng_for(stream: int, seed: int = 20240817) -> RngHandle:
    return RngHandle(seed=seed, stream_id=stream)


def three_sigma(samples: np.ndarray) -> float:
    return 3.0 * samples.std(ddof=1) / np.sqrt(len(samples))
