import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from contifact.completion import CompletionProblem, completion_residuals, solve_completion
from contifact.grid import Grid, SampledFunction, fourier_forward, fourier_inverse
from contifact.transforms import project_pm
from contifact.trigpoly import TrigPoly, conj_bar, poly_mul

SETTINGS = settings(max_examples=40, deadline=None, derandomize=True, database=None,
                      suppress_health_check=[HealthCheck.too_slow])

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)
TAU = 0.7


@st.composite
def lattice_polys(draw, max_len=5):
    ks = draw(st.lists(st.integers(-6, 6), min_size=1, max_size=max_len))
    cs = draw(st.lists(cplx, min_size=len(ks), max_size=len(ks)))
    return TrigPoly(ks, cs, tau=TAU)


@st.composite
def signals(draw, n=64):
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    g = Grid.symmetric(8.0, n)
    return SampledFunction(g, rng.normal(size=n) + 1j * rng.normal(size=n))


XS = np.linspace(-5, 5, 41)


@SETTINGS
@given(lattice_polys())
def test_conj_bar_involution(p):
    assert conj_bar(conj_bar(p)).allclose(p)
    np.testing.assert_allclose(conj_bar(p)(XS), np.conj(p(XS)), atol=1e-10)


@SETTINGS
@given(lattice_polys(), lattice_polys())
def test_conj_bar_multiplicative(p, q):
    assert conj_bar(poly_mul(p, q)).allclose(poly_mul(conj_bar(p), conj_bar(q)), atol=1e-10)
    np.testing.assert_allclose(poly_mul(p, q)(XS), p(XS) * q(XS), atol=1e-9)


@SETTINGS
@given(signals())
def test_fourier_round_trip_and_isometry(f):
    F = fourier_forward(f)
    back = fourier_inverse(F)
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
    assert abs(F.norm() - f.norm()) <= 1e-12 * f.norm()


@SETTINGS
@given(signals())
def test_projection_split(f):
    sp = project_pm(f)
    assert np.max(np.abs(sp.plus.values + sp.minus.values - f.values)) <= 1e-12
    assert abs(sp.plus.inner(sp.minus)) <= 1e-10 * f.norm() ** 2
    again = project_pm(sp.plus)
    assert np.max(np.abs(again.minus.values)) <= 1e-12


@SETTINGS
@given(st.integers(2, 3), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_random_completion_residuals(m, N, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(m - 1, N + 1)) + 1j * rng.normal(size=(m - 1, N + 1))
    f = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    f[0] += 3.0 * np.sign(f[0].real or 1.0)
    p = CompletionProblem.from_coeffs(z, f, 1.0)
    U = solve_completion(p)
    unit, det, ana = completion_residuals(p, U)
    assert unit <= 1e-8 and det <= 1e-8 and ana <= 1e-8 * p.f_norm()
