"""Trigonometric polynomials ``sum_k c_k exp(i lambda_k x)`` and e_tau atoms.

Two storage modes share one class:

* lattice polynomials keep integer multipliers ``k`` of a fixed step ``tau``
  (frequencies ``k * tau``), so products and conjugations never drift off
  the lattice;
* general polynomials keep real frequencies, merged when closer than
  ``MERGE_TOL``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .grid import SQRT_2PI, Grid, SampledFunction

MERGE_TOL = 1e-12


class TrigPoly:
    """Finite sum ``sum_k c_k exp(i lambda_k x)`` with distinct frequencies.

    Parameters
    ----------
    freqs : array_like
        Real frequencies, or integer lattice indices when ``tau`` is given.
    coeffs : array_like
        Complex coefficients, one per frequency.
    tau : float, optional
        Lattice step.  When set, ``freqs`` must be integers and the polynomial
        lives on the lattice ``tau * Z``.
    """

    __slots__ = ("_keys", "_coeffs", "tau")

    def __init__(self, freqs: Iterable, coeffs: Iterable, tau: Optional[float] = None):
        freqs = np.atleast_1d(np.asarray(freqs))
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        if freqs.shape != coeffs.shape:
            raise ValueError("freqs and coeffs must have equal length")
        if tau is not None:
            if tau <= 0:
                raise ValueError("lattice step tau must be positive")
            ks = np.rint(freqs.astype(float))
            if freqs.size and np.max(np.abs(ks - freqs)) > 0:
                raise ValueError("lattice polynomial needs integer frequency indices")
            keys, inverse = np.unique(ks.astype(np.int64), return_inverse=True)
            merged = np.zeros(keys.shape, complex)
            np.add.at(merged, inverse, coeffs)
        else:
            keys, merged = _merge_real(freqs.astype(float), coeffs)
        keep = merged != 0
        self._keys = keys[keep]
        self._coeffs = merged[keep]
        self.tau = None if tau is None else float(tau)

    # -- constructors -------------------------------------------------------
    @classmethod
    def plus(cls, coeffs: Iterable, tau: float) -> "TrigPoly":
        """Element of P+_{tau,N}: ``sum_{k=0}^N c_k exp(i k tau x)``."""
        c = np.asarray(coeffs, complex)
        return cls(np.arange(c.size), c, tau)

    @classmethod
    def minus(cls, coeffs: Iterable, tau: float) -> "TrigPoly":
        """Element of P-_{tau,N}: ``sum_{k=0}^N c_k exp(-i k tau x)``."""
        c = np.asarray(coeffs, complex)
        return cls(-np.arange(c.size), c, tau)

    @classmethod
    def constant(cls, c: complex, tau: Optional[float] = None) -> "TrigPoly":
        return cls([0], [c], tau)

    # -- views --------------------------------------------------------------
    @property
    def is_lattice(self) -> bool:
        return self.tau is not None

    @property
    def ks(self) -> np.ndarray:
        if self.tau is None:
            raise ValueError("not a lattice polynomial")
        return self._keys.copy()

    @property
    def freqs(self) -> np.ndarray:
        if self.tau is None:
            return self._keys.copy()
        return self._keys * self.tau

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs.copy()

    @property
    def terms(self) -> list[tuple[float, complex]]:
        return list(zip(self.freqs.tolist(), self._coeffs.tolist()))

    def __len__(self) -> int:
        return self._coeffs.size

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.4g})e^(i{f:.4g}x)" for f, c in self.terms) or "0"
        return f"TrigPoly({body})"

    def is_plus(self) -> bool:
        return bool(np.all(self.freqs >= 0))

    def is_minus(self) -> bool:
        return bool(np.all(self.freqs <= 0))

    def in_lattice_class(self, tau: float, N: int, sign: int = +1) -> bool:
        """Membership in P+_{tau,N} (``sign=+1``) or P-_{tau,N} (``sign=-1``)."""
        try:
            ks = self.lattice_indices(tau)
        except ValueError:
            return False
        ks = sign * ks
        return bool(np.all((ks >= 0) & (ks <= N)))

    def lattice_indices(self, tau: float, tol: float = 1e-9) -> np.ndarray:
        """Integer ``k`` with ``lambda = k tau`` for every term."""
        if self.tau is not None and math.isclose(self.tau, tau, rel_tol=1e-12):
            return self._keys.copy()
        q = self.freqs / tau
        k = np.rint(q)
        if q.size and np.max(np.abs(q - k)) > tol:
            raise ValueError(f"frequency off the lattice tau={tau}")
        return k.astype(np.int64)

    def dense(self, tau: float, kmin: int, kmax: int) -> np.ndarray:
        """Coefficient vector for lattice indices ``kmin..kmax``."""
        ks = self.lattice_indices(tau)
        if ks.size and (ks.min() < kmin or ks.max() > kmax):
            raise ValueError("polynomial has terms outside the requested index range")
        out = np.zeros(kmax - kmin + 1, complex)
        out[ks - kmin] = self._coeffs
        return out

    # -- evaluation -----------------------------------------------------------
    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.zeros(x.shape, complex)
        for lam, c in zip(self.freqs, self._coeffs):
            out += c * np.exp(1j * lam * x)
        return out

    # -- algebra --------------------------------------------------------------
    def _combine(self, other: "TrigPoly", sign: float) -> "TrigPoly":
        tau = _common_tau(self, other)
        if tau is not None:
            return TrigPoly(
                np.concatenate([self.lattice_indices(tau), other.lattice_indices(tau)]),
                np.concatenate([self._coeffs, sign * other._coeffs]),
                tau,
            )
        return TrigPoly(
            np.concatenate([self.freqs, other.freqs]),
            np.concatenate([self._coeffs, sign * other._coeffs]),
        )

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other, self.tau)
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other, self.tau)
        return self._combine(other, -1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c: complex) -> "TrigPoly":
        return TrigPoly(self._keys, self._coeffs * c, self.tau)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return poly_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def conj_bar(self) -> "TrigPoly":
        return conj_bar(self)

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))


def _merge_real(freqs: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if freqs.size == 0:
        return freqs, coeffs
    order = np.argsort(freqs, kind="stable")
    f, c = freqs[order], coeffs[order]
    keys = [f[0]]
    vals = [c[0]]
    for lam, ck in zip(f[1:], c[1:]):
        if abs(lam - keys[-1]) <= MERGE_TOL * max(1.0, abs(lam)):
            vals[-1] += ck
        else:
            keys.append(lam)
            vals.append(ck)
    return np.asarray(keys, float), np.asarray(vals, complex)


def _common_tau(p: TrigPoly, q: TrigPoly) -> Optional[float]:
    if p.tau is None or q.tau is None:
        # a generic polynomial joins the lattice of the other when it fits
        lattice = p if p.tau is not None else q if q.tau is not None else None
        other = q if lattice is p else p
        if lattice is not None:
            try:
                other.lattice_indices(lattice.tau)
                return lattice.tau
            except ValueError:
                return None
        return None
    if math.isclose(p.tau, q.tau, rel_tol=1e-12):
        return p.tau
    return None


def conj_bar(p: TrigPoly) -> TrigPoly:
    """``sum conj(c_k) exp(-i lambda_k x)``; equals ``conj(p(x))`` pointwise."""
    return TrigPoly(-p._keys, np.conj(p._coeffs), p.tau)


def poly_mul(p: TrigPoly, q: TrigPoly) -> TrigPoly:
    """Exact product: frequencies add, coefficients convolve."""
    tau = _common_tau(p, q)
    if tau is not None:
        kp, kq = p.lattice_indices(tau), q.lattice_indices(tau)
        if kp.size == 0 or kq.size == 0:
            return TrigPoly([], [], tau)
        lo = kp.min() + kq.min()
        prod = np.convolve(p.dense(tau, kp.min(), kp.max()), q.dense(tau, kq.min(), kq.max()))
        return TrigPoly(lo + np.arange(prod.size), prod, tau)
    f = (p.freqs[:, None] + q.freqs[None, :]).ravel()
    c = (p._coeffs[:, None] * q._coeffs[None, :]).ravel()
    return TrigPoly(f, c)


def negative_part_coeffs(p: TrigPoly, tau: float, N: int) -> np.ndarray:
    """Coefficients ``(c_{-1}, ..., c_{-N})`` of ``p`` on the lattice ``tau Z``.

    They all vanish iff ``p`` has no negative frequencies down to ``-N tau``.
    Terms below ``-N tau`` raise, as they fall outside the declared range.
    """
    ks = p.lattice_indices(tau)
    if ks.size and ks.min() < -N:
        raise ValueError(f"term at index {ks.min()} below -N={-N}")
    out = np.zeros(N, complex)
    for k, c in zip(ks, p.coeffs):
        if k < 0:
            out[-k - 1] = c
    return out


def etau(x, tau: float) -> np.ndarray:
    """The atom ``e_tau(x) = (i/sqrt(2 pi)) (1 - exp(i tau x)) / x``.

    Evaluated as ``tau/sqrt(2 pi) * exp(i tau x / 2) * sinc(tau x / 2 pi)``,
    which is exact algebraically and has no cancellation near ``x = 0``.
    """
    x = np.asarray(x, float)
    return (tau / SQRT_2PI) * np.exp(0.5j * tau * x) * np.sinc(tau * x / (2.0 * math.pi))


@dataclass(frozen=True)
class EtauFunction:
    """``poly(x) * e_tau(x)``: a trigonometric polynomial modulating the atom."""

    poly: TrigPoly
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def __call__(self, x) -> np.ndarray:
        return self.poly(x) * etau(x, self.tau)


def eval_on_grid(p: Union[TrigPoly, EtauFunction], grid: Grid) -> SampledFunction:
    """Pointwise evaluation on the time grid."""
    return SampledFunction(grid, p(grid.t), "time")
