import numpy as np
import pytest

from vpadjoint.rng import XorShift64Star


@pytest.fixture
def complex_pair():
    """Seeded (A, B) factory: complex_pair(m, n, r, seed=0)."""
    def make(m, n, r, seed=0):
        rng = XorShift64Star(seed)
        return rng.complex_matrix(m, n), rng.complex_matrix(m, r)
    return make


def rel(x, ref):
    return float(np.max(np.abs(np.asarray(x) - ref)) / np.max(np.abs(ref)))
