"""Half-line projections, the Hilbert transform, translation and bin averaging.

Everything acts through the frequency-domain representation of
:mod:`contifact.grid`.  Frequency ``0`` belongs to the nonnegative half; the
Nyquist bin (most negative frequency) belongs to the negative one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .grid import Grid, SampledFunction, fourier_forward, fourier_inverse
from .trigpoly import EtauFunction, TrigPoly, etau

DEFAULT_LEAK_TOL = 1e-3


@dataclass(frozen=True)
class SpectrumSplit:
    """``f = plus + minus`` with spectra on ``xi >= 0`` and ``xi < 0``."""

    plus: SampledFunction
    minus: SampledFunction

    def reconstruct(self) -> SampledFunction:
        return self.plus + self.minus


def _time(f: SampledFunction) -> None:
    if f.domain != "time":
        raise ValueError("expected a time-domain function")


def project_pm(f: SampledFunction) -> SpectrumSplit:
    """Split ``f`` into its nonnegative- and negative-frequency parts."""
    _time(f)
    F = fourier_forward(f)
    pos = f.grid.xi >= 0
    plus = fourier_inverse(F.with_values(np.where(pos, F.values, 0)))
    minus = fourier_inverse(F.with_values(np.where(pos, 0, F.values)))
    return SpectrumSplit(plus, minus)


def hilbert_multiplier(grid: Grid) -> np.ndarray:
    """``-i sgn(xi)`` with the DC and Nyquist bins set to zero.

    Zeroing the unpaired Nyquist bin keeps the multiplier odd on the discrete
    grid, so real inputs map to real outputs.
    """
    mult = -1j * np.sign(grid.xi)
    mult[0] = 0.0
    return mult


def hilbert(f: SampledFunction) -> SampledFunction:
    """Hilbert transform with multiplier ``-i sgn(xi)``, i.e. ``(1/pi) p.v. int f(s)/(t-s) ds``."""
    _time(f)
    if np.max(np.abs(f.values.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(f.values))):
        raise ValueError("hilbert expects a real-valued function")
    F = fourier_forward(f.with_values(f.values.real))
    out = fourier_inverse(F.with_values(F.values * hilbert_multiplier(f.grid)))
    return out.with_values(out.values.real)


def translate(f: SampledFunction, tau: float) -> SampledFunction:
    """``(T_tau f)(t) = f(t - tau)`` on the periodic window.

    Integer multiples of ``dt`` are applied as an exact roll of the samples;
    any other shift uses the phase factor ``exp(-i xi tau)`` on the spectrum.
    """
    _time(f)
    g = f.grid
    steps = tau / g.dt
    s = round(steps)
    if abs(steps - s) <= 1e-9 * max(1.0, abs(steps)):
        return f.with_values(np.roll(f.values, s))
    F = fourier_forward(f)
    return fourier_inverse(F.with_values(F.values * np.exp(-1j * g.xi * tau)))


def analytic_window(grid: Grid, sigma: float | None = None, power: int = 4) -> np.ndarray:
    """Weight ``(i sigma / (t + i sigma))^power``.

    It is bounded and analytic in the upper half-plane with unit value at 0, so
    multiplying by it keeps nonnegative spectra nonnegative while taming the
    slow tails that would otherwise wrap around the periodic window.
    """
    if sigma is None:
        sigma = grid.half_width / 4.0
    t = grid.t
    return (1j * sigma / (t + 1j * sigma)) ** power


def rho_minus(
    rows: SampledFunction | Sequence[SampledFunction] | np.ndarray,
    grid: Grid | None = None,
    window: np.ndarray | None = None,
) -> float:
    """Relative negative-frequency energy of ``f * w`` summed over functions.

    ``rows`` is a single function, a list of them, or an array whose last
    axis is time.  The value is 0 for functions in the nonnegative-frequency
    space (up to the window's own truncation) and at most 1.
    """
    if isinstance(rows, SampledFunction):
        grid = rows.grid
        data = rows.values[None, :]
    elif isinstance(rows, np.ndarray):
        if grid is None:
            raise ValueError("grid required for raw arrays")
        data = rows.reshape(-1, rows.shape[-1])
    else:
        rows = list(rows)
        grid = rows[0].grid
        data = np.stack([r.values for r in rows])
    if window is None:
        window = analytic_window(grid)
    neg = grid.xi < 0
    total = 0.0
    bad = 0.0
    for v in data:
        F = fourier_forward(SampledFunction(grid, v * window)).values
        e = np.abs(F) ** 2
        total += e.sum()
        bad += e[neg].sum()
    return float(math.sqrt(bad / total)) if total > 0 else 0.0


@dataclass(frozen=True, eq=False)
class DiscretizedAtomRow:
    """Step-spectrum approximation ``sum_k c_k exp(i lambda_k t) e_tau(t)``.

    Bin ``k`` covers ``[lambda_k, lambda_k + tau)``.  With ``sign = +1`` bins
    run rightwards from the left endpoint ``origin``
    (``lambda_k = origin + k tau``); with ``sign = -1`` they run leftwards
    from the right endpoint ``origin + bins * tau``
    (``lambda_k = origin + (bins - 1 - k) tau``).
    """

    coeffs: np.ndarray
    tau: float
    sign: int
    origin: float
    leaked_fraction: float = 0.0
    warning: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, complex))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def bins(self) -> int:
        return self.coeffs.size

    @property
    def support(self) -> tuple[float, float]:
        return self.origin, self.origin + self.bins * self.tau

    @property
    def left_edges(self) -> np.ndarray:
        k = np.arange(self.bins)
        if self.sign > 0:
            return self.origin + k * self.tau
        return self.origin + (self.bins - 1 - k) * self.tau

    def lattice_indices(self) -> np.ndarray:
        """Integers ``j`` with ``lambda_k = j tau``; requires ``origin`` on the lattice."""
        q = self.left_edges / self.tau
        j = np.rint(q)
        if np.max(np.abs(q - j), initial=0.0) > 1e-9:
            raise ValueError("origin is not a multiple of tau")
        return j.astype(np.int64)

    def modulation(self) -> TrigPoly:
        """The polynomial in front of ``e_tau``, on the lattice ``tau Z``."""
        return TrigPoly(self.lattice_indices(), self.coeffs, self.tau)

    def as_etau(self) -> EtauFunction:
        return EtauFunction(self.modulation(), self.tau)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        phases = np.exp(1j * np.multiply.outer(t, self.left_edges))
        return (phases @ self.coeffs) * etau(t, self.tau)

    def step_spectrum(self, grid: Grid) -> SampledFunction:
        """The piecewise-constant spectrum on the grid's frequency samples."""
        xi = grid.xi
        out = np.zeros(grid.n, complex)
        for lam, c in zip(self.left_edges, self.coeffs):
            out[(xi >= lam - 1e-9 * grid.dxi) & (xi < lam + self.tau - 1e-9 * grid.dxi)] = c
        return SampledFunction(grid, out, "frequency")

    def represented(self, grid: Grid) -> SampledFunction:
        """Time function whose grid spectrum is the step spectrum."""
        return fourier_inverse(self.step_spectrum(grid))


def interval_average_discretize(
    f: SampledFunction,
    support: tuple[float, float] | Iterable[float],
    bins: int,
    sign: int = 1,
    leak_tol: float = DEFAULT_LEAK_TOL,
    spectrum: SampledFunction | None = None,
) -> DiscretizedAtomRow:
    """Average ``F(f)`` over ``bins`` equal subintervals of ``[a, b)``.

    Parameters
    ----------
    f : SampledFunction
        Time-domain input.
    support : (a, b)
        Half-open spectral interval; ``a``, ``b`` and the bin width
        ``tau = (b - a) / bins`` must be multiples of the grid's ``dxi``.
    bins : int
        Number of bins.
    sign : {1, -1}
        Ordering of the returned coefficients, see :class:`DiscretizedAtomRow`.
    leak_tol : float
        Relative spectral energy allowed outside ``[a, b)`` before the row is
        flagged.
    spectrum : SampledFunction, optional
        Precomputed ``fourier_forward(f)``.

    Returns
    -------
    DiscretizedAtomRow
        ``c_k = (1/tau) * integral over bin k of F(f)``, by the rectangle rule
        on the frequency grid.
    """
    _time(f)
    a, b = (float(v) for v in support)
    bins = int(bins)
    if bins < 1 or not b > a:
        raise ValidationError(f"invalid support [{a}, {b}) or bins={bins}")
    g = f.grid
    tau = (b - a) / bins
    for name, v in (("left endpoint", a), ("right endpoint", b), ("bin width", tau)):
        if not g.is_aligned(v):
            raise ValidationError(f"{name} {v} is not a multiple of dxi={g.dxi}", support=[a, b])
    K = round(tau / g.dxi)
    ja = g.xi_index(a)
    jb = g.xi_index(b)
    if ja < 0 or jb > g.n:
        raise ValidationError("support exceeds the frequency window", support=[a, b])
    F = (spectrum if spectrum is not None else fourier_forward(f)).values
    block = F[ja:jb].reshape(bins, K)
    coeffs = block.sum(axis=1) * g.dxi / tau
    if sign < 0:
        coeffs = coeffs[::-1]
    energy = np.abs(F) ** 2
    total = energy.sum()
    leaked = float((total - energy[ja:jb].sum()) / total) if total > 0 else 0.0
    leaked = max(leaked, 0.0)
    return DiscretizedAtomRow(coeffs, tau, sign, a, leaked, leaked > leak_tol)
