"""Test densities with known factors, and independent reference solvers.

* :class:`RationalMatrixSpec` describes ``A(t)`` whose entries are sums of
  ``residue * exp(i omega t) / (t - pole)`` with poles in the lower
  half-plane and ``omega >= 0``; such entries are bounded and analytic in
  the upper half-plane, so ``S = A A*`` has ``A`` as a spectral factor when
  ``det A`` is outer.
* :func:`bauer_toeplitz_factor` factors a matrix trigonometric polynomial by
  Cholesky decomposition of its block Toeplitz matrix.
* :func:`brute_force_completion` solves tiny completion problems by global
  multi-start least squares.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import least_squares

from .completion import (
    CompletionProblem,
    UnitaryPolyMatrix,
    bottom_row_product,
    check_points,
    completion_residuals,
)
from .errors import OracleFailure, ValidationError
from .grid import Grid
from .pipeline import MatrixFunction, SpectralDensity
from .trigpoly import negative_part_coeffs


@dataclass(frozen=True)
class PoleTerm:
    pole: complex
    residue: complex
    omega: float = 0.0

    def __post_init__(self):
        if not complex(self.pole).imag < 0:
            raise ValidationError(f"pole {self.pole} is not in the lower half-plane")
        if self.omega < 0:
            raise ValidationError("modulation frequency omega must be >= 0")

    def __call__(self, z):
        return self.residue * np.exp(1j * self.omega * z) / (z - self.pole)


@dataclass(frozen=True)
class RationalEntry:
    constant: complex = 0.0
    terms: tuple = ()

    def __call__(self, z):
        z = np.asarray(z)
        out = np.full(z.shape, complex(self.constant))
        for term in self.terms:
            out = out + term(z)
        return out


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _uc(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


@dataclass(frozen=True)
class RationalMatrixSpec:
    """``r x r`` matrix of :class:`RationalEntry`, row-major."""

    entries: tuple
    name: str = ""

    def __post_init__(self):
        r = len(self.entries)
        if r == 0 or any(len(row) != r for row in self.entries):
            raise ValidationError("entries must form a square matrix")

    @property
    def r(self) -> int:
        return len(self.entries)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z)
        out = np.zeros(z.shape + (self.r, self.r), complex)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                out[..., i, j] = e(z)
        return out

    def det_winding(self, R: float = 40.0, eps: float = 1e-3, n: int = 8192) -> float:
        """Number of zeros of ``det A`` inside ``[-R, R] x [eps, R]`` (argument principle)."""
        s = np.linspace(0.0, 1.0, n, endpoint=False)
        edges = [
            -R + 2 * R * s + 1j * eps,
            R + 1j * (eps + (R - eps) * s),
            R - 2 * R * s + 1j * R,
            -R + 1j * (R - (R - eps) * s),
        ]
        z = np.concatenate(edges + [edges[0][:1]])
        d = np.linalg.det(self(z))
        dphi = np.angle(d[1:] / d[:-1])
        return float(np.sum(dphi) / (2 * math.pi))

    def check_outer(self, R: float = 40.0) -> None:
        """Reject specs whose determinant has zeros in the upper half-plane.

        Also rejects a determinant that decays exponentially along the
        imaginary axis, the signature of an inner factor ``exp(i a z)``.
        """
        wn = self.det_winding(R)
        if abs(wn) > 0.5:
            raise ValidationError(f"det A has about {wn:.1f} zeros in the upper half-plane")
        y = np.array([R / 2, R])
        d = np.abs(np.linalg.det(self(1j * y)))
        if d[0] == 0 or d[1] * R**self.r < 1e-6 * d[0] * (R / 2) ** self.r:
            raise ValidationError("det A decays exponentially on the imaginary axis (inner factor)")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "r": self.r,
            "entries": [
                [
                    {
                        "constant": _c(e.constant),
                        "terms": [
                            {"pole": _c(t.pole), "residue": _c(t.residue), "omega": t.omega}
                            for t in e.terms
                        ],
                    }
                    for e in row
                ]
                for row in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RationalMatrixSpec":
        rows = []
        for row in d["entries"]:
            rows.append(tuple(
                RationalEntry(
                    _uc(e.get("constant", 0.0)),
                    tuple(PoleTerm(_uc(t["pole"]), _uc(t["residue"]), float(t.get("omega", 0.0)))
                          for t in e.get("terms", [])),
                )
                for e in row
            ))
        spec = cls(tuple(rows), d.get("name", ""))
        if "r" in d and int(d["r"]) != spec.r:
            raise ValidationError("declared r does not match entries")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RationalMatrixSpec":
        return cls.from_dict(json.loads(text))


def simple(residue: complex, pole: complex, omega: float = 0.0) -> RationalEntry:
    """Entry ``residue * exp(i omega t) / (t - pole)``."""
    return RationalEntry(0.0, (PoleTerm(pole, residue, omega),))


ZERO = RationalEntry()


def synth_density(spec: RationalMatrixSpec, grid: Grid, check: bool = True):
    """``(S, A)`` with ``S = A A*`` sampled on ``grid``."""
    if check:
        spec.check_outer()
    A = spec(grid.t)
    S = A @ np.conj(np.swapaxes(A, 1, 2))
    return SpectralDensity(grid, S), MatrixFunction(grid, A)


def _scalar_rational() -> RationalMatrixSpec:
    return RationalMatrixSpec(((simple(1, -1j),),), "scalar-rational")


def _rational_2x2() -> RationalMatrixSpec:
    return RationalMatrixSpec(
        ((simple(1, -1j), ZERO), (simple(0.5, -1j), simple(1, -1j))), "rational-2x2"
    )


def _phase_twisted() -> RationalMatrixSpec:
    return RationalMatrixSpec(
        ((simple(1, -1j), ZERO), (simple(1, -2j, 1.0), simple(1, -2j))), "phase-twisted"
    )


def _full_2x2() -> RationalMatrixSpec:
    return RationalMatrixSpec(
        ((simple(1, -1j), simple(0.5, -2j)), (simple(0.5, -3j), simple(1, -1j))), "full-2x2"
    )


RATIONAL_PRESETS: dict[str, Callable[[], RationalMatrixSpec]] = {
    "scalar-rational": _scalar_rational,
    "rational-2x2": _rational_2x2,
    "phase-twisted": _phase_twisted,
    "full-2x2": _full_2x2,
}

PRESETS = tuple(RATIONAL_PRESETS) + ("gaussian",)


def gaussian_density(grid: Grid, r: int = 2) -> SpectralDensity:
    """``exp(-t^2) C`` with a fixed positive definite ``C``; fails log-integrability."""
    C = np.eye(r) + 0.5 * (np.ones((r, r)) - np.eye(r)) / max(r - 1, 1)
    return SpectralDensity(grid, np.exp(-grid.t**2)[:, None, None] * C)


def preset(name: str, grid: Grid):
    """``(S, oracle)``; the oracle is ``None`` for presets without a factor."""
    if name == "gaussian":
        return gaussian_density(grid), None
    try:
        spec = RATIONAL_PRESETS[name]()
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return synth_density(spec, grid)


def unitary_quotient_deviation(A: np.ndarray, A_hat: np.ndarray, mask=None) -> float:
    """``max ||Q(t) - mean Q||_F`` for ``Q = A^-1 A_hat`` over the masked samples.

    Zero iff ``A_hat = A Q`` with a constant ``Q``; for two spectral factors
    of one density that ``Q`` is unitary.
    """
    A = np.asarray(A)
    A_hat = np.asarray(A_hat)
    if mask is not None:
        A, A_hat = A[mask], A_hat[mask]
    Q = np.linalg.solve(A, A_hat)
    return float(np.max(np.linalg.norm(Q - Q.mean(axis=0), axis=(1, 2))))


# -- periodic (lattice) oracles ---------------------------------------------


@dataclass
class MatrixPolynomial:
    """``sum_k coeffs[k] z^k`` with ``z = exp(i tau x)``."""

    coeffs: np.ndarray
    tau: float = 1.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        z = np.exp(1j * self.tau * np.multiply.outer(x, np.arange(self.coeffs.shape[0])))
        return np.einsum("...k,kij->...ij", z, self.coeffs)


def laurent_coefficients(values: np.ndarray, degree: int) -> np.ndarray:
    """Coefficients ``k = -degree..degree`` of samples over one period on a uniform grid."""
    n = values.shape[0]
    c = np.fft.fft(values, axis=0) / n
    idx = np.arange(-degree, degree + 1) % n
    return c[idx]


def completion_gram_coeffs(p: CompletionProblem) -> np.ndarray:
    """Laurent coefficients of ``G = F F*`` for the polynomial part of ``F``."""
    x = check_points(p.tau, 2 * p.N)
    F = p.matrix(x)
    G = F @ np.conj(np.swapaxes(F, -1, -2))
    return laurent_coefficients(G, 2 * p.N)


def bauer_toeplitz_factor(G_coeffs: np.ndarray, K: int = 64, degree: Optional[int] = None,
                          tau: float = 1.0) -> MatrixPolynomial:
    """Analytic factor ``Phi`` of ``G = Phi Phi*`` from a block Toeplitz Cholesky factor.

    Parameters
    ----------
    G_coeffs : ndarray, shape (2d+1, m, m)
        ``G_k`` for ``k = -d..d``; must satisfy ``G_{-k} = G_k*``.
    K : int
        Number of Toeplitz blocks.
    degree : int, optional
        Degree of the returned factor (default ``d``).

    Raises
    ------
    OracleFailure
        If the block Toeplitz matrix is not positive definite.
    """
    G = np.asarray(G_coeffs, complex)
    if G.ndim == 1:
        G = G[:, None, None]
    d = (G.shape[0] - 1) // 2
    m = G.shape[1]
    if not np.allclose(G[::-1], np.conj(np.swapaxes(G, 1, 2)), atol=1e-10 * max(1.0, np.abs(G).max())):
        raise ValidationError("coefficients are not Hermitian-symmetric (G_-k != G_k*)")
    degree = d if degree is None else degree
    T = np.zeros((K * m, K * m), complex)
    for i in range(K):
        for j in range(K):
            k = i - j
            if abs(k) <= d:
                T[i * m:(i + 1) * m, j * m:(j + 1) * m] = G[k + d]
    try:
        L = np.linalg.cholesky(T)
    except np.linalg.LinAlgError as exc:
        raise OracleFailure("block Toeplitz matrix is not positive definite") from exc
    last = L[(K - 1) * m:, :]
    coeffs = np.zeros((degree + 1, m, m), complex)
    for k in range(min(degree + 1, K)):
        col = K - 1 - k
        coeffs[k] = last[:, col * m:(col + 1) * m]
    return MatrixPolynomial(coeffs, tau)


def fu_polynomial(p: CompletionProblem, U: UnitaryPolyMatrix) -> MatrixPolynomial:
    """``F U`` as a polynomial in ``z``; negative-frequency coefficients must be negligible."""
    deg = p.N + U.N
    c = np.zeros((deg + 1, p.m, p.m), complex)
    c[: U.N + 1, : p.m - 1, :] = np.transpose(U.coeffs[: p.m - 1], (2, 0, 1))
    for j, q in enumerate(bottom_row_product(p, U)):
        ks = q.lattice_indices(p.tau)
        for k, v in zip(ks, q.coeffs):
            if k >= 0:
                c[k, p.m - 1, j] += v
    return MatrixPolynomial(c, p.tau)


def brute_force_completion(p: CompletionProblem, restarts: int = 32, seed: int = 0,
                           tol: float = 1e-10, eps_c0: float = 1e-10) -> UnitaryPolyMatrix:
    """Global multi-start least squares over all coefficients of ``U`` (m <= 2, N <= 2).

    Raises
    ------
    OracleFailure
        When the corner coefficient vanishes (outside the existence
        hypothesis, so no result is claimed) or the restart budget runs out.
    """
    if p.m > 2 or p.N > 2:
        raise ValidationError("brute force oracle is limited to m <= 2, N <= 2")
    fnorm = float(np.linalg.norm(p.fplus_coeffs))
    if fnorm == 0 or abs(p.corner) < eps_c0 * fnorm:
        raise OracleFailure("corner coefficient c0 vanishes; existence is not guaranteed")
    m, N1 = p.m, p.N + 1
    x = check_points(p.tau, 2 * p.N)
    size = m * m * N1

    def unpack(theta):
        return UnitaryPolyMatrix((theta[:size] + 1j * theta[size:]).reshape(m, m, N1), p.tau)

    def resid(theta):
        U = unpack(theta)
        V = U(x)
        E = (V @ np.conj(np.swapaxes(V, -1, -2)) - np.eye(m)).ravel()
        d = np.linalg.det(V) - 1.0
        neg = np.concatenate([negative_part_coeffs(q, p.tau, 2 * p.N)
                              for q in bottom_row_product(p, U)])
        r = np.concatenate([E, d, neg])
        return np.concatenate([r.real, r.imag])

    rng = np.random.default_rng(seed)
    best = None
    for k in range(restarts):
        th0 = rng.normal(size=2 * size) / math.sqrt(size)
        if k == 0:
            th0 = np.concatenate([UnitaryPolyMatrix.identity(m, p.N, p.tau).coeffs.ravel().real,
                                  np.zeros(size)])
        sol = least_squares(resid, th0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        U = unpack(sol.x)
        res = completion_residuals(p, U)
        if best is None or max(res) < max(best[1]):
            best = (U, res)
        if max(res) <= tol:
            return U
    raise OracleFailure("brute force budget exhausted", residuals=list(best[1]))
