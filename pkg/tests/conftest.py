import numpy as np
import pytest

from symdisc._rng import Xoshiro256, derive_seed
from symdisc.qudit_core import SymmetricSetSpec, random_coeffs


def random_spec(seed, d_max=9, n_max=13, d_min=2):
    """Deterministic random (D, N, c) with d_min <= D <= d_max, D <= N <= n_max."""
    rng = Xoshiro256(seed)
    D = d_min + int(rng.uniform() * (d_max - d_min + 1))
    N = D + int(rng.uniform() * (n_max - D + 1))
    return SymmetricSetSpec(D, N, random_coeffs(D, derive_seed(seed, 0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20161016)
