import numpy as np
import pytest

from fjs import Instance


@pytest.fixture
def tiny():
    # two jobs, two machines, all values hand-checkable
    return Instance(
        n=2,
        m=2,
        machines=np.array([[0, 1], [1, 0]]),
        times=np.array([[[1, 2, 3], [2, 3, 4]], [[1, 1, 1], [2, 2, 2]]], dtype=float),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def random_sequence(inst, rng):
    return rng.permutation(np.repeat(np.arange(inst.n), inst.m))


def random_tfns(rng, count, scale=100.0):
    a2 = rng.uniform(0, scale, count)
    lo = a2 * rng.uniform(0.5, 1.0, count)
    hi = a2 + (scale - a2) * rng.uniform(0.0, 0.5, count)
    return np.stack([lo, a2, hi], axis=1)
