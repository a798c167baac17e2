import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SY = np.array([[0, -1j], [1j, 0]])
SYY = np.kron(SY, SY)


def textbook_concurrence(rho):
    """Wootters concurrence from the eigenvalues of rho (sy sy) rho* (sy sy)."""
    r = rho @ SYY @ rho.conj() @ SYY
    lam = np.sqrt(np.clip(np.linalg.eigvals(r).real, 0, None))
    lam = np.sort(lam)[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


@pytest.fixture
def ref_pair():
    from lambda_ecs import CoherentPair

    return CoherentPair(1.0, 1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


HALF_PI = math.pi / 2
