import math

import numpy as np
import pytest

from contifact.errors import ValidationError
from contifact.grid import Grid, SampledFunction, fourier_forward, fourier_inverse, interior_mask
from contifact.transforms import (
    analytic_window,
    hilbert,
    interval_average_discretize,
    project_pm,
    rho_minus,
    translate,
)
from contifact.trigpoly import etau

from .conftest import band_limited


def discrete_atom(grid, a, b):
    """Time function whose grid spectrum is exactly the indicator of [a, b)."""
    chi = ((grid.xi >= a - 1e-12) & (grid.xi < b - 1e-12)).astype(complex)
    return fourier_inverse(SampledFunction(grid, chi, "frequency"))


def test_project_lorentzian():
    g = Grid.symmetric(2.0**14, 2**20)
    sp = project_pm(SampledFunction(g, 1 / (1 + g.t**2)))
    m = interior_mask(g, 0.5)
    exact = 1j / (2 * (g.t + 1j))
    assert np.max(np.abs(sp.plus.values - exact)[m]) <= 1e-4


def test_split_reconstructs(rng):
    g = Grid.symmetric(20.0, 4096)
    f = SampledFunction(g, rng.normal(size=g.n) + 1j * rng.normal(size=g.n))
    sp = project_pm(f)
    assert np.max(np.abs(sp.reconstruct().values - f.values)) <= 1e-10
    assert abs(sp.plus.inner(sp.minus)) <= 1e-10 * f.norm() ** 2
    again = project_pm(sp.plus)
    assert np.max(np.abs(again.plus.values - sp.plus.values)) <= 1e-10
    assert np.max(np.abs(again.minus.values)) <= 1e-10
    Fp = fourier_forward(sp.plus).values
    assert np.max(np.abs(Fp[g.xi < 0])) <= 1e-10 * np.max(np.abs(Fp))


def test_plus_part_of_atom():
    g = Grid.from_frequency_step(1 / 32, 2**14)
    e = discrete_atom(g, 0.0, 1.0)
    sp = project_pm(e)
    assert np.max(np.abs(sp.plus.values - e.values)) <= 1e-12
    # the sampled continuous atom differs only by window truncation
    cont = SampledFunction(g, etau(g.t, 1.0))
    rel = (project_pm(cont).plus - cont).norm() / cont.norm()
    assert rel < 0.1


def test_hilbert_lorentzian():
    g = Grid.symmetric(4096.0, 2**18)
    Hf = hilbert(SampledFunction(g, 1 / (1 + g.t**2)))
    m = interior_mask(g, 0.25)
    assert np.max(np.abs(Hf.values - g.t / (1 + g.t**2))[m]) <= 1e-4
    assert np.all(Hf.values.imag == 0)


def test_hilbert_involution(rng):
    g = Grid.symmetric(50.0, 4096)
    f = SampledFunction(g, band_limited(g, rng, mean_zero=True))
    HHf = hilbert(hilbert(f))
    assert np.max(np.abs(HHf.values + f.values)) <= 1e-10 * np.max(np.abs(f.values))
    assert hilbert(f).norm() == pytest.approx(f.norm(), rel=1e-10)


def test_hilbert_multiplier(rng):
    g = Grid.symmetric(30.0, 1024)
    f = SampledFunction(g, band_limited(g, rng))
    F = fourier_forward(f).values
    FH = fourier_forward(hilbert(f)).values
    keep = (g.xi != 0) & (np.arange(g.n) > 0)
    assert np.allclose(FH[keep], (-1j * np.sign(g.xi) * F)[keep], atol=1e-10)


def test_hilbert_windowed_cosine():
    g = Grid.symmetric(200.0, 2**14)
    omega = 40 * g.dxi
    w = np.exp(-g.t**2 / (2 * (g.half_width / 4) ** 2))
    Hf = hilbert(SampledFunction(g, w * np.cos(omega * g.t)))
    m = interior_mask(g, 0.5)
    assert np.max(np.abs(Hf.values - w * np.sin(omega * g.t))[m]) <= 1e-3


def test_hilbert_rejects_complex():
    g = Grid.symmetric(1.0, 16)
    with pytest.raises(ValueError):
        hilbert(SampledFunction(g, 1j * np.ones(16)))


def test_translate_examples(rng):
    g = Grid.symmetric(8.0, 1024)
    f = SampledFunction(g, rng.normal(size=g.n))
    assert np.all(translate(f, 0.0).values == f.values)
    ind = SampledFunction(g, ((g.t >= 0) & (g.t < 1)).astype(float))
    shifted = translate(ind, 1.0).values.real
    assert np.array_equal(shifted, ((g.t >= 1) & (g.t < 2)).astype(float))
    for tau in (0.5, 0.0123):
        lhs = fourier_forward(translate(f, tau)).values
        rhs = np.exp(-1j * g.xi * tau) * fourier_forward(f).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-10
        assert translate(f, tau).norm() == pytest.approx(f.norm(), rel=1e-12)


def test_discretize_atom_is_fixed_point():
    g = Grid.from_frequency_step(1 / 16, 2**12)
    row = interval_average_discretize(discrete_atom(g, 0.0, 0.5), (0.0, 0.5), 1)
    assert np.allclose(row.coeffs, [1.0], atol=1e-12)
    assert row.tau == 0.5 and not row.warning
    assert np.allclose(row.represented(g).values, discrete_atom(g, 0.0, 0.5).values, atol=1e-12)


def test_discretize_constant_spectrum():
    g = Grid.from_frequency_step(1 / 16, 2**12)
    row = interval_average_discretize(discrete_atom(g, -1.0, 0.0), (-1.0, 0.0), 2)
    assert np.allclose(row.coeffs, [1.0, 1.0], atol=1e-12)
    assert row.leaked_fraction < 1e-20


@pytest.mark.parametrize("N", [1, 4, 16])
def test_discretize_cauchy_kernel(N):
    g = Grid.from_frequency_step(1 / 256, 2**20)
    f = SampledFunction(g, 1 / (g.t + 1j))
    row = interval_average_discretize(f, (0.0, 1.0), N)
    oracle = -1j * math.sqrt(2 * math.pi) * N * (1 - math.exp(-1 / N))
    # rectangle rule over the bin, and the half-jump sample at xi = 0,
    # each cost O(dxi / tau)
    xi = np.arange(0, 256 // N) * g.dxi
    quad = np.sum(-1j * math.sqrt(2 * math.pi) * np.exp(-xi)) * g.dxi * N
    step = math.sqrt(2 * math.pi) * g.dxi * N
    assert abs(quad - oracle) <= step
    assert abs(row.coeffs[0] - oracle) <= 2 * step
    assert row.warning and row.leaked_fraction == pytest.approx(math.exp(-2), rel=1e-2)


def test_discretize_error_decreases():
    g = Grid.from_frequency_step(1 / 256, 2**18)
    f = SampledFunction(g, 1 / (g.t + 1j))
    errs = [(f - interval_average_discretize(f, (0.0, 1.0), N).represented(g)).norm() for N in (4, 16)]
    assert errs[1] < errs[0]


def test_discretized_row_evaluation():
    g = Grid.from_frequency_step(1 / 64, 2**16)
    row = interval_average_discretize(discrete_atom(g, -1.0, 0.0), (-1.0, 0.0), 4, sign=-1)
    assert np.allclose(row.left_edges, [-0.25, -0.5, -0.75, -1.0])
    assert list(row.lattice_indices()) == [-1, -2, -3, -4]
    poly = row.modulation()
    assert poly.is_minus() and poly.in_lattice_class(0.25, 4, -1)
    t = np.array([0.0, 1.3, -7.0])
    assert np.allclose(row(t), row.as_etau()(t))
    # the continuous representative matches the grid one up to window effects
    rep = row.represented(g)
    m = interior_mask(g, 0.05)
    assert np.max(np.abs(rep.values - row(g.t))[m]) < 1e-2


def test_discretize_rejects_misaligned():
    g = Grid.from_frequency_step(0.1, 1024)
    f = SampledFunction(g, np.ones(g.n))
    with pytest.raises(ValidationError):
        interval_average_discretize(f, (0.0, 0.35), 1)
    with pytest.raises(ValidationError):
        interval_average_discretize(f, (0.0, 1.0), 3)


def test_rho_minus_separates_halves(wide_grid):
    g = wide_grid
    plus = SampledFunction(g, 1 / (g.t + 1j))
    minus = SampledFunction(g, 1 / (g.t - 1j))
    assert rho_minus(plus) < 1e-4
    assert rho_minus(minus) > 0.9
    w = analytic_window(g)
    assert abs(w[g.n // 2] - 1) < 1e-15 and np.max(np.abs(w)) <= 1 + 1e-15
