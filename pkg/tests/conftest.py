import numpy as np
import pytest

from modblind.operator import ModulatedConvOperator
from modblind.spectral import ProblemDims


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


@pytest.fixture
def small_op(rng):
    return ModulatedConvOperator.random(ProblemDims(8, 5, 3), rng)


def naive_circular(a, b):
    """O(QM) circular convolution sum."""
    Q = len(a)
    out = np.zeros(Q, dtype=complex)
    for n in range(Q):
        for m in range(len(b)):
            out[n] += b[m] * a[(n - m) % Q]
    return out


def dense_dft(Q):
    """DFT matrix built entry by entry from its definition."""
    F = np.empty((Q, Q), dtype=complex)
    for q in range(Q):
        for k in range(Q):
            F[q, k] = np.exp(-2j * np.pi * q * k / Q) / np.sqrt(Q)
    return F
