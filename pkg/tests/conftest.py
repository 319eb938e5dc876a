import numpy as np
import pytest

from contifact.grid import Grid


@pytest.fixture(scope="session")
def wide_grid():
    """T = 512, n = 2^16: the reference resolution for rational densities."""
    return Grid.symmetric(512.0, 2**16)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def band_limited(grid, rng, width=0.25, mean_zero=False):
    """Random real signal with spectrum inside the middle ``width`` of the band."""
    n = grid.n
    spec = np.zeros(n, complex)
    k = int(width * n / 2)
    half = rng.normal(size=k) + 1j * rng.normal(size=k)
    spec[1:k + 1] = half
    spec[-k:] = np.conj(half[::-1])
    if not mean_zero:
        spec[0] = rng.normal()
    return np.fft.ifft(spec).real * np.sqrt(n)
