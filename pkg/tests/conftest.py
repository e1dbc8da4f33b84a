import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_sym(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) * scale
    return 0.5 * (A + A.T)


def negative_count(M, tol=1e-9):
    """Independent oracle: number of eigenvalues below -tol (LAPACK)."""
    vals = np.linalg.eigvalsh(M)
    return int(np.sum(vals < -tol * max(1.0, np.max(np.abs(vals)))))


def sfl_oracle(path):
    """In finite dimensions sfl = n_-(A(0)) - n_-(A(1)) with the kernel counted as nonnegative."""
    return negative_count(path.at(0.0)) - negative_count(path.at(1.0))
