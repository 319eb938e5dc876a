"""Scalar spectral factorization on the real line.

A positive density ``f`` has an outer factor ``f+`` with ``|f+|^2 = f`` iff
``integral |log f(t)| / (1 + t^2) dt`` is finite.  The factor is
``exp((log f + i H log f) / 2)``, with ``H`` the Hilbert transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DensityError, PaleyWienerError
from .grid import SampledFunction
from .transforms import hilbert

POS_FLOOR = 1e-14
CLIP_BUDGET = 1e-3


@dataclass(frozen=True)
class PwReport:
    """Outcome of the log-integrability test.

    Attributes
    ----------
    integral_value : float
        Window integral of ``|log f| / (1 + t^2)`` plus the fitted tail beyond
        the window.  ``inf`` when diverged.
    window_T : float
        Half width of the largest window.
    diverged : bool
        True when the partial integrals keep growing or ``f`` vanishes on a
        non-negligible set.
    trend : list of (T, partial integral)
        Nested windows ``T/4, T/2, T``.
    """

    integral_value: float
    window_T: float
    diverged: bool
    trend: list = field(default_factory=list)
    window_integral: float = 0.0
    tail_estimate: float = 0.0
    clipped: int = 0
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "integral_value": self.integral_value,
            "window_T": self.window_T,
            "diverged": self.diverged,
            "trend": [list(p) for p in self.trend],
            "window_integral": self.window_integral,
            "tail_estimate": self.tail_estimate,
            "clipped": self.clipped,
            "reason": self.reason,
        }


def _positive_values(f: SampledFunction, floor: float) -> tuple[np.ndarray, int]:
    v = f.values
    scale = float(np.max(np.abs(v)))
    if not np.all(np.isfinite(v)):
        raise DensityError("density has non-finite samples")
    if scale == 0.0:
        raise PaleyWienerError("density vanishes identically; the Paley-Wiener condition fails")
    if np.max(np.abs(v.imag)) > 1e-10 * scale:
        raise DensityError("density must be real-valued")
    x = v.real
    neg = x < -1e-10 * scale
    if np.any(neg):
        i = int(np.argmax(neg))
        raise DensityError(
            f"density is negative at t={f.grid.t[i]:.6g}", t=float(f.grid.t[i]), value=float(x[i])
        )
    low = x < floor * scale
    return np.maximum(x, floor * scale), int(low.sum())


def paley_wiener_check(
    f: SampledFunction, floor: float = POS_FLOOR, clip_budget: float = CLIP_BUDGET
) -> PwReport:
    """Decide log-integrability of a sampled positive density.

    Any windowed integral is finite, so divergence is judged from the growth
    of partial integrals over the nested windows ``T/4, T/2, T``: increments
    that fail to shrink geometrically mean the integrand does not decay.
    Densities that sit below ``floor * max f`` on more than ``clip_budget``
    of the samples are also reported as diverged, since ``log f`` is then
    unbounded on a set of positive measure.
    """
    x, clipped = _positive_values(f, floor)
    t = f.grid.t
    T = f.grid.half_width
    integrand = np.abs(np.log(x)) / (1.0 + t**2)
    dt = f.grid.dt
    trend = []
    for frac in (0.25, 0.5, 1.0):
        mask = np.abs(t) <= frac * T
        trend.append((frac * T, float(dt * integrand[mask].sum())))
    I1, I2, I3 = (p[1] for p in trend)
    inc1, inc2 = I2 - I1, I3 - I2
    if clipped > clip_budget * f.grid.n:
        return PwReport(math.inf, T, True, trend, I3, math.inf, clipped,
                        f"density below {floor:g} * max on {clipped} of {f.grid.n} samples")
    if inc2 > 0.9 * inc1 and inc2 > 1e-8 * max(1.0, I3):
        return PwReport(math.inf, T, True, trend, I3, math.inf, clipped,
                        "partial integrals do not saturate")
    tail = _tail_estimate(t, np.abs(np.log(x)), T)
    return PwReport(I3 + tail, T, False, trend, I3, tail, clipped, "")


def _tail_estimate(t: np.ndarray, alog: np.ndarray, T: float) -> float:
    """Integral beyond the window of ``(a + b log|t|) / t^2``, fitted per side."""
    tail = 0.0
    for side in (t >= 0.5 * T, t <= -0.5 * T):
        tt = np.abs(t[side])
        if tt.size < 2:
            continue
        A = np.column_stack([np.ones_like(tt), np.log(tt)])
        a, b = np.linalg.lstsq(A, alog[side], rcond=None)[0]
        tail += max((a + b * (math.log(T) + 1.0)) / T, 0.0)
    return float(tail)


def outer_factor(
    f: SampledFunction, floor: float = POS_FLOOR, check: bool = True
) -> SampledFunction:
    """Boundary values of the outer function with ``|f+|^2 = f``.

    The Hilbert transform on a periodic window is inaccurate for ``log f``
    that grows like ``log t^2``; the asymptotic part
    ``a - alpha log(1 + t^2) + 2 gamma arg(t + i)``, fitted on the outer half
    of the window, is factored exactly as ``exp(a/2) (t + i)^-(alpha + i gamma)``
    and only the remainder goes through the transform.

    Raises
    ------
    PaleyWienerError
        If :func:`paley_wiener_check` reports divergence.
    """
    if check:
        rep = paley_wiener_check(f, floor)
        if rep.diverged:
            raise PaleyWienerError(
                "no spectral factor exists: the Paley-Wiener condition fails "
                f"({rep.reason})", report=rep.to_dict()
            )
        x, _ = _positive_values(f, floor)
    else:
        x, _ = _positive_values(f, floor)
    t = f.grid.t
    T = f.grid.half_width
    lf = np.log(x)
    far = np.abs(t) >= 0.5 * T
    basis = np.column_stack(
        [np.ones(t.size), -np.log1p(t**2), 2.0 * np.angle(t + 1j)]
    )
    a, alpha, gamma = np.linalg.lstsq(basis[far], lf[far], rcond=None)[0]
    h = lf - basis @ np.array([a, alpha, gamma])
    Hh = hilbert(f.with_values(h)).values.real
    s = alpha + 1j * gamma
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(0.5 * (h + 1j * Hh) + 0.5 * a - s * np.log(t + 1j))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        raise PaleyWienerError(
            "overflow while exponentiating the outer factor",
            t_range=[float(t[bad].min()), float(t[bad].max())],
        )
    return f.with_values(vals)
