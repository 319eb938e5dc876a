"""Unitary completion of a one-row-perturbed identity.

Given ``F = [[I_{m-1}, 0], [zeta, f+]]`` with ``zeta_i`` in ``P-_{tau,N}``
and ``f+`` in ``P+_{tau,N}`` (constant coefficient nonzero), find a unitary
``U`` with ``det U = 1`` whose first ``m-1`` rows are in ``P+_{tau,N}``,
whose last row is the conjugate of a ``P+_{tau,N}`` row, and such that
``F U`` has only nonnegative frequencies.

Each column ``v = (u_1, ..., u_{m-1}, conj u_m)`` of such a ``U`` satisfies

* ``sum_i zeta_i u_i + f+ conj(u_m)`` has no frequencies ``-N tau..-tau``
  (analyticity of the bottom row of ``F U``), and
* ``conj(f+) u_i - conj(zeta_i) conj(u_m)`` has no frequencies ``tau..N tau``
  for every ``i < m`` (the same condition for ``U* F^-1``-type rows, which
  a paraunitary ``U`` must also meet).

Written in the coefficients of ``u_i`` and the conjugated coefficients of
``u_m`` this is a complex-linear system whose solution space has dimension
exactly ``m`` when ``c_0(f+) != 0``.  Its solutions have constant Gram
functions, so an orthonormal basis (in coefficient space) is pointwise
orthonormal and gives ``U`` directly.  The nonlinear least-squares route is
kept as a fallback for ill-conditioned instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import least_squares

from .errors import DegenerateCornerError, SolverError, ValidationError
from .trigpoly import TrigPoly, conj_bar, negative_part_coeffs, poly_mul


@dataclass(frozen=True)
class SolverConfig:
    tol_unitary: float = 1e-8
    tol_det: float = 1e-8
    tol_analytic: float = 1e-8
    eps_c0: float = 1e-10
    max_iter: int = 200
    restarts: int = 8
    seed: int = 0
    method: str = "linear"
    perturb_corner: bool = False

    def __post_init__(self):
        for name in ("tol_unitary", "tol_det", "tol_analytic", "eps_c0"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.method not in ("linear", "nls"):
            raise ValidationError(f"unknown solver method {self.method!r}")


@dataclass(eq=False)
class CompletionProblem:
    """Bottom row ``(zeta_1, ..., zeta_{m-1}, f+)`` on the lattice ``tau Z``.

    With ``atom=True`` every bottom-row entry carries a common factor
    ``e_tau``; the completion is the same, because multiplying a row by an
    element of the nonnegative-frequency space keeps analyticity intact.
    """

    m: int
    tau: float
    N: int
    zeta: list
    f_plus: TrigPoly
    atom: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("matrix size m must be >= 1")
        if len(self.zeta) != self.m - 1:
            raise ValidationError(f"need {self.m - 1} zeta entries, got {len(self.zeta)}")
        if not self.tau > 0 or self.N < 0:
            raise ValidationError("tau must be positive and N nonnegative")
        for i, z in enumerate(self.zeta):
            if not z.in_lattice_class(self.tau, self.N, -1):
                raise ValidationError(f"zeta[{i}] is not in P-_(tau,N)")
        if not self.f_plus.in_lattice_class(self.tau, self.N, +1):
            raise ValidationError("f_plus is not in P+_(tau,N)")

    @classmethod
    def from_coeffs(cls, zeta_coeffs, fplus_coeffs, tau: float, atom: bool = False):
        """``zeta_coeffs[i, k]`` multiplies ``exp(-i k tau x)``; ``fplus_coeffs[k]`` ``exp(i k tau x)``."""
        fc = np.asarray(fplus_coeffs, complex)
        zc = np.asarray(zeta_coeffs, complex).reshape(-1, fc.size)
        zeta = [TrigPoly.minus(row, tau) for row in zc]
        return cls(zc.shape[0] + 1, tau, fc.size - 1, zeta, TrigPoly.plus(fc, tau), atom)

    @property
    def zeta_coeffs(self) -> np.ndarray:
        out = np.zeros((self.m - 1, self.N + 1), complex)
        for i, z in enumerate(self.zeta):
            out[i] = z.dense(self.tau, -self.N, 0)[::-1]
        return out

    @property
    def fplus_coeffs(self) -> np.ndarray:
        return self.f_plus.dense(self.tau, 0, self.N)

    @property
    def corner(self) -> complex:
        return complex(self.fplus_coeffs[0])

    def f_norm(self) -> float:
        """Coefficient norm of the bottom row (the identity block counts as 1)."""
        row = np.concatenate([self.zeta_coeffs.ravel(), self.fplus_coeffs])
        return float(max(1.0, np.linalg.norm(row)))

    def matrix(self, x) -> np.ndarray:
        """Pointwise values of the polynomial part of ``F``."""
        x = np.asarray(x, float)
        F = np.zeros(x.shape + (self.m, self.m), complex)
        for i in range(self.m - 1):
            F[..., i, i] = 1.0
            F[..., self.m - 1, i] = self.zeta[i](x)
        F[..., self.m - 1, self.m - 1] = self.f_plus(x)
        return F


@dataclass(eq=False)
class UnitaryPolyMatrix:
    """``m x m`` matrix with entries ``u_ij`` in ``P+_{tau,N}``.

    ``coeffs[i, j, k]`` is the coefficient of ``exp(i k tau x)`` in ``u_ij``.
    Rows ``0..m-2`` of the represented matrix are ``u_ij``; row ``m-1`` is
    ``conj_bar(u_{m-1, j})``.
    """

    coeffs: np.ndarray
    tau: float

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, complex)
        if self.coeffs.ndim != 3 or self.coeffs.shape[0] != self.coeffs.shape[1]:
            raise ValidationError("coeffs must have shape (m, m, N+1)")

    @classmethod
    def identity(cls, m: int, N: int, tau: float) -> "UnitaryPolyMatrix":
        c = np.zeros((m, m, N + 1), complex)
        c[np.arange(m), np.arange(m), 0] = 1.0
        return cls(c, tau)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def N(self) -> int:
        return self.coeffs.shape[2] - 1

    def entry(self, i: int, j: int) -> TrigPoly:
        """The represented ``(i, j)`` entry as a polynomial."""
        p = TrigPoly.plus(self.coeffs[i, j], self.tau)
        return conj_bar(p) if i == self.m - 1 else p

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        z = np.exp(1j * self.tau * np.multiply.outer(x, np.arange(self.N + 1)))
        U = np.einsum("...k,ijk->...ij", z, self.coeffs)
        U[..., -1, :] = np.conj(U[..., -1, :])
        return U

    evaluate = __call__

    def right_multiply(self, Q: np.ndarray) -> "UnitaryPolyMatrix":
        """``U Q`` for a constant matrix ``Q`` (the conjugated row transforms with ``conj Q``)."""
        c = np.einsum("ijk,jl->ilk", self.coeffs, Q)
        c[-1] = np.einsum("jk,jl->lk", self.coeffs[-1], np.conj(Q))
        return UnitaryPolyMatrix(c, self.tau)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "re": self.coeffs.real.tolist(),
            "im": self.coeffs.imag.tolist(),
        }


@dataclass(frozen=True)
class AnalyticitySystem:
    """Bottom-row analyticity constraints for one column of ``U``.

    ``complex_matrix`` acts on ``(coeffs of u_1..u_{m-1}, conj coeffs of
    u_m)``; ``real_matrix`` acts on ``(Re, Im)`` of the plain coefficients of
    ``u_1..u_m`` stacked as ``[Re u_1, ..., Re u_m, Im u_1, ..., Im u_m]``.
    """

    complex_matrix: np.ndarray
    real_matrix: np.ndarray
    null_basis: np.ndarray
    rank: int
    m: int
    N: int

    @property
    def n_unknowns(self) -> int:
        return self.m * (self.N + 1)

    @property
    def n_equations(self) -> int:
        return self.N

    @property
    def dimension(self) -> int:
        return self.null_basis.shape[1]


def _b_rows(zc: np.ndarray, fc: np.ndarray) -> np.ndarray:
    """Coefficient of ``exp(-i n tau x)`` in ``sum zeta_i u_i + f+ conj(u_m)``, n=1..N."""
    m1, N1 = zc.shape
    N = N1 - 1
    A = np.zeros((N, (m1 + 1) * N1), complex)
    for n in range(1, N + 1):
        l = np.arange(N1 - n)
        for i in range(m1):
            A[n - 1, i * N1 + l] = zc[i, l + n]
        l = np.arange(n, N1)
        A[n - 1, m1 * N1 + l] = fc[l - n]
    return A


def _a_rows(zc: np.ndarray, fc: np.ndarray) -> np.ndarray:
    """Coefficient of ``exp(i n tau x)`` in ``conj(f+) u_i - conj(zeta_i) conj(u_m)``."""
    m1, N1 = zc.shape
    N = N1 - 1
    A = np.zeros((m1 * N, (m1 + 1) * N1), complex)
    for i in range(m1):
        for n in range(1, N + 1):
            r = i * N + n - 1
            l = np.arange(n, N1)
            A[r, i * N1 + l] = np.conj(fc[l - n])
            l = np.arange(N1 - n)
            A[r, m1 * N1 + l] = -np.conj(zc[i, l + n])
    return A


def build_analyticity_system(p: CompletionProblem) -> AnalyticitySystem:
    """Linear constraints making the bottom row of ``F U`` analytic, per column."""
    zc, fc = p.zeta_coeffs, p.fplus_coeffs
    m, N1 = p.m, p.N + 1
    C = _b_rows(zc, fc)
    Y = C[:, : (m - 1) * N1]
    W = C[:, (m - 1) * N1:]
    # u_m enters conjugated: W conj(c)
    R = np.block(
        [
            [Y.real, W.real, -Y.imag, W.imag],
            [Y.imag, W.imag, Y.real, -W.real],
        ]
    )
    if R.shape[0] == 0:
        basis = np.eye(R.shape[1])
        rank = 0
    else:
        basis = sla.null_space(R)
        rank = R.shape[1] - basis.shape[1]
    return AnalyticitySystem(C, R, basis, rank, m, p.N)


def completion_system(p: CompletionProblem) -> np.ndarray:
    """The full ``m N x m (N+1)`` complex system whose null space yields ``U``."""
    zc, fc = p.zeta_coeffs, p.fplus_coeffs
    return np.vstack([_a_rows(zc, fc), _b_rows(zc, fc)])


def bottom_row_product(p: CompletionProblem, U: UnitaryPolyMatrix) -> list[TrigPoly]:
    """Polynomial part of row ``m`` of ``F U``."""
    out = []
    for j in range(p.m):
        acc = poly_mul(p.f_plus, U.entry(p.m - 1, j))
        for i in range(p.m - 1):
            acc = acc + poly_mul(p.zeta[i], U.entry(i, j))
        out.append(acc)
    return out


def check_points(tau: float, N: int, per_period: Optional[int] = None) -> np.ndarray:
    n = per_period or max(64, 8 * (N + 1))
    return np.arange(n) * (2.0 * math.pi / tau / n)


def completion_residuals(p: CompletionProblem, U: UnitaryPolyMatrix) -> tuple[float, float, float]:
    """``(unitarity, det, analyticity)`` residuals.

    Unitarity and determinant are maxima over one period of the lattice;
    analyticity is the largest coefficient norm of negative frequencies among
    the bottom-row entries of ``F U`` (unnormalized).
    """
    if U.m != p.m:
        raise ValidationError("U and problem sizes differ")
    x = check_points(p.tau, max(p.N, U.N))
    V = U(x)
    E = V @ np.conj(np.swapaxes(V, -1, -2)) - np.eye(p.m)
    unit = float(np.max(np.linalg.norm(E, axis=(-2, -1))))
    det = float(np.max(np.abs(np.linalg.det(V) - 1.0)))
    depth = p.N + U.N
    ana = 0.0
    for q in bottom_row_product(p, U):
        ana = max(ana, float(np.linalg.norm(negative_part_coeffs(q, p.tau, depth))))
    return unit, det, ana


def _columns_to_matrix(V: np.ndarray, m: int, N1: int, tau: float) -> UnitaryPolyMatrix:
    """Null vectors in ``(y, w)`` coordinates -> coefficient tensor."""
    c = np.zeros((m, m, N1), complex)
    for j in range(V.shape[1]):
        for i in range(m - 1):
            c[i, j] = V[i * N1:(i + 1) * N1, j]
        c[m - 1, j] = np.conj(V[(m - 1) * N1:, j])
    return UnitaryPolyMatrix(c, tau)


def _canonicalize(U: UnitaryPolyMatrix) -> UnitaryPolyMatrix:
    """Fix the free constant right unitary: closest to ``I`` at frequency 0, then ``det = 1``."""
    C0 = U.coeffs[:, :, 0].copy()
    C0[-1] = np.conj(C0[-1])
    a, _, bh = np.linalg.svd(C0)
    U = U.right_multiply(bh.conj().T @ a.conj().T)
    d = np.linalg.det(U(np.zeros(1)))[0]
    Q = np.eye(U.m, dtype=complex)
    Q[-1, -1] = np.conj(d) / abs(d)
    return U.right_multiply(Q)


def _check_corner(p: CompletionProblem, cfg: SolverConfig) -> CompletionProblem:
    fnorm = float(np.linalg.norm(p.fplus_coeffs))
    c0 = p.corner
    if abs(c0) >= cfg.eps_c0 * max(fnorm, 1e-300) and fnorm > 0:
        return p
    if cfg.perturb_corner and p.m > 1:
        eps = 10.0 * cfg.eps_c0 * max(fnorm, 1.0)
        q = CompletionProblem(p.m, p.tau, p.N, list(p.zeta),
                              p.f_plus + TrigPoly.constant(eps, p.tau), p.atom, dict(p.diagnostics))
        q.diagnostics["corner_perturbation"] = eps
        return q
    raise DegenerateCornerError(
        f"corner coefficient degenerate: |c0|={abs(c0):.3g} below "
        f"{cfg.eps_c0:g} * ||f+||={fnorm:.3g}",
        c0=c0, f_norm=fnorm,
    )


def _solve_linear(p: CompletionProblem) -> tuple[UnitaryPolyMatrix, dict]:
    A = completion_system(p)
    m, N1 = p.m, p.N + 1
    if A.shape[0] == 0:
        return UnitaryPolyMatrix.identity(m, p.N, p.tau), {"singular_gap": math.inf}
    _, s, vh = np.linalg.svd(A)
    V = vh[-m:].conj().T
    smax = s[0] if s.size else 1.0
    gap = float(s[A.shape[0] - 1] / smax) if smax > 0 else 0.0
    info = {"singular_gap": gap, "null_residual": float(np.linalg.norm(A @ V))}
    return _canonicalize(_columns_to_matrix(V, m, N1, p.tau)), info


def _solve_nls(
    p: CompletionProblem, cfg: SolverConfig, start: Optional[UnitaryPolyMatrix] = None
) -> tuple[UnitaryPolyMatrix, dict]:
    """Least squares for unitarity and ``det = 1`` inside the analyticity solution space."""
    sysm = build_analyticity_system(p)
    B = sysm.null_basis
    m, N1 = p.m, p.N + 1
    nb = B.shape[1]
    x = check_points(p.tau, 2 * p.N)

    def unpack(theta):
        cols = B @ theta.reshape(nb, m)
        half = m * N1
        c = (cols[:half] + 1j * cols[half:]).reshape(m, N1, m).transpose(0, 2, 1)
        return UnitaryPolyMatrix(c, p.tau)

    def resid(theta):
        V = unpack(theta)(x)
        E = V @ np.conj(np.swapaxes(V, -1, -2)) - np.eye(m)
        d = np.linalg.det(V) - 1.0
        r = np.concatenate([E.ravel(), d])
        return np.concatenate([r.real, r.imag])

    def project(U: UnitaryPolyMatrix):
        c = U.coeffs.transpose(0, 2, 1).reshape(m * N1, m)
        flat = np.concatenate([c.real, c.imag])
        return np.linalg.lstsq(B, flat, rcond=None)[0].ravel()

    rng = np.random.default_rng(cfg.seed)
    inits = [project(start or UnitaryPolyMatrix.identity(m, p.N, p.tau))]
    inits += [rng.normal(size=nb * m) for _ in range(cfg.restarts - 1)]
    best = None
    for k, th0 in enumerate(inits):
        sol = least_squares(resid, th0, max_nfev=cfg.max_iter, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        cand = unpack(sol.x)
        res = completion_residuals(p, cand)
        if best is None or max(res) < max(best[1]):
            best = (cand, res, k)
        if res[0] <= cfg.tol_unitary and res[1] <= cfg.tol_det:
            break
    return best[0], {"nls_restart": best[2], "nls_residuals": best[1]}


def solve_completion(p: CompletionProblem, cfg: Optional[SolverConfig] = None) -> UnitaryPolyMatrix:
    """Unitary ``U`` with ``det U = 1`` and ``F U`` analytic.

    Raises
    ------
    DegenerateCornerError
        If ``|c_0(f+)|`` is below ``eps_c0 * ||f+||`` and corner perturbation
        is disabled.
    SolverError
        If no candidate meets the residual contract; carries the best
        residuals found.
    """
    cfg = cfg or SolverConfig()
    q = _check_corner(p, cfg)
    if q is not p:
        p.diagnostics.update(q.diagnostics)
    contract = (cfg.tol_unitary, cfg.tol_det, cfg.tol_analytic * q.f_norm())

    def ok(res):
        return all(r <= t for r, t in zip(res, contract))

    tried = []
    U = None
    if cfg.method == "linear":
        U, info = _solve_linear(q)
        res = completion_residuals(q, U)
        p.diagnostics.update(info, method="linear", residuals=res)
        tried.append(("linear", res))
        if ok(res):
            return U
    U2, info = _solve_nls(q, cfg, start=U)
    res = completion_residuals(q, U2)
    p.diagnostics.update(info, method="nls", residuals=res)
    tried.append(("nls", res))
    if ok(res):
        return U2
    best = min(tried, key=lambda r: max(r[1]))
    raise SolverError(
        "completion solver did not converge", residuals=best[1],
        attempts=[{"method": k, "residuals": list(r)} for k, r in tried],
    )
