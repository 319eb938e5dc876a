"""Matrix spectral factorization ``S = S+ (S+)*`` on a time grid.

The factor is built in two stages.  A pointwise Cholesky factor, re-phased
column by column with scalar outer factors, gives a lower-triangular ``M``
with ``M M* = S`` whose diagonal is analytic.  Then for ``m = 2..r`` the
leading ``m x m`` block is made analytic by a unitary polynomial matrix
``U_m`` with ``det U_m = 1``, computed from the discretized
negative-frequency part of row ``m``; the result is ``S+ = M U_2 ... U_r``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .completion import (
    CompletionProblem,
    SolverConfig,
    UnitaryPolyMatrix,
    completion_residuals,
    solve_completion,
)
from .errors import (
    ContifactError,
    DegenerateCornerError,
    DensityError,
    LeakageError,
    PaleyWienerError,
    PivotError,
    ValidationError,
)
from .grid import Grid, SampledFunction, fourier_forward
from .scalar import POS_FLOOR, outer_factor, paley_wiener_check
from .transforms import (
    DEFAULT_LEAK_TOL,
    analytic_window,
    interval_average_discretize,
    project_pm,
    rho_minus,
)

AUTO_ENERGY = 1.0 - 1e-6


class MatrixFunction:
    """``r x r`` matrices sampled on a time grid; ``values`` has shape ``(n, r, r)``."""

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 3 or values.shape[0] != grid.n or values.shape[1] != values.shape[2]:
            raise ValidationError(
                f"matrix values must have shape ({grid.n}, r, r), got {values.shape}"
            )
        self.grid = grid
        self.values = values

    @property
    def r(self) -> int:
        return self.values.shape[1]

    def entry(self, i: int, j: int) -> SampledFunction:
        return SampledFunction(self.grid, self.values[:, i, j])

    def block(self, m: int) -> "MatrixFunction":
        return MatrixFunction(self.grid, self.values[:, :m, :m])

    def adjoint(self) -> "MatrixFunction":
        return MatrixFunction(self.grid, np.conj(np.swapaxes(self.values, 1, 2)))

    def gram(self) -> np.ndarray:
        """Pointwise ``A A*``."""
        return self.values @ np.conj(np.swapaxes(self.values, 1, 2))

    def det(self) -> np.ndarray:
        return np.linalg.det(self.values)

    def __matmul__(self, other: Union["MatrixFunction", np.ndarray]) -> "MatrixFunction":
        if isinstance(other, MatrixFunction):
            if other.grid != self.grid:
                raise ValidationError("matrix functions live on different grids")
            other = other.values
        return MatrixFunction(self.grid, self.values @ other)


class SpectralDensity(MatrixFunction):
    """Hermitian matrix density on a grid."""

    def __init__(self, grid: Grid, values: np.ndarray, herm_tol: float = 1e-10):
        super().__init__(grid, values)
        scale = float(np.max(np.abs(self.values))) or 1.0
        dev = float(np.max(np.abs(self.values - np.conj(np.swapaxes(self.values, 1, 2)))))
        if dev > herm_tol * scale:
            i = int(np.argmax(np.max(np.abs(self.values - np.conj(np.swapaxes(self.values, 1, 2))), axis=(1, 2))))
            raise DensityError(
                f"density is not Hermitian (deviation {dev:.3g}) at t={grid.t[i]:.6g}",
                t=float(grid.t[i]), deviation=dev,
            )
        self.values = 0.5 * (self.values + np.conj(np.swapaxes(self.values, 1, 2)))


@dataclass(eq=False)
class TriangularFactor:
    """``M`` lower triangular with ``M M* = S`` and outer diagonal entries."""

    M: MatrixFunction
    diag_factors: list
    pivots: list

    def residual(self, S: MatrixFunction) -> float:
        E = S.values - self.M.gram()
        return float(np.max(np.linalg.norm(E, axis=(1, 2))) / np.max(np.linalg.norm(S.values, axis=(1, 2))))


def _cholesky_located(S: SpectralDensity, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Batched lower Cholesky with per-column pivot checks."""
    A = S.values
    n, r, _ = A.shape
    L = np.zeros_like(A)
    pivots = np.zeros((r, n))
    scale = np.max(np.abs(A), axis=(1, 2))
    # samples that vanish relative to the peak are left to the log-integrability test
    small = scale <= POS_FLOOR * np.max(scale)
    for j in range(r):
        d = A[:, j, j].real - np.sum(np.abs(L[:, j, :j]) ** 2, axis=1)
        bad = (d <= tol * scale) & ~small
        if np.any(bad):
            k = int(np.argmax(bad))
            raise PivotError(
                f"pivot {j + 1} is not positive at t={S.grid.t[k]:.6g} (value {d[k]:.3g})",
                index=j + 1, t=float(S.grid.t[k]), pivot=float(d[k]), sample=k,
            )
        d = np.where(small, np.maximum(d, tol * POS_FLOOR * np.max(scale)), d)
        pivots[j] = d
        ljj = np.sqrt(d)
        L[:, j, j] = ljj
        for i in range(j + 1, r):
            s = A[:, i, j] - np.sum(L[:, i, :j] * np.conj(L[:, j, :j]), axis=1)
            L[:, i, j] = s / ljj
    return L, pivots


def triangular_factorize(S: SpectralDensity, pivot_tol: float = 1e-14) -> TriangularFactor:
    """Pointwise Cholesky re-phased so that diagonal entries are outer factors.

    Raises
    ------
    PivotError
        If a pivot is not positive at some grid point (checked first).
    PaleyWienerError
        If ``det S`` or some pivot fails the log-integrability test (the
        pivot index is reported).
    """
    L, piv = _cholesky_located(S, pivot_tol)
    det = np.linalg.det(S.values).real
    # det S decays like a product of r pivots, so its floor scales accordingly
    det_rep = paley_wiener_check(SampledFunction(S.grid, np.maximum(det, 0.0)), POS_FLOOR**S.r)
    if det_rep.diverged:
        raise PaleyWienerError(
            "no spectral factor exists: det S fails the Paley-Wiener condition "
            f"({det_rep.reason})", report=det_rep.to_dict(),
        )
    M = L.copy()
    diag, pivots = [], []
    for j in range(S.r):
        d = SampledFunction(S.grid, piv[j])
        try:
            fp = outer_factor(d)
        except PaleyWienerError as exc:
            raise PaleyWienerError(
                f"pivot {j + 1}: {exc}", index=j + 1, **exc.detail
            ) from exc
        M[:, :, j] *= (fp.values / L[:, j, j])[:, None]
        diag.append(fp)
        pivots.append(d)
    return TriangularFactor(MatrixFunction(S.grid, M), diag, pivots)


def split_bottom_row(M_m: MatrixFunction) -> tuple[list, list]:
    """``(phi_plus, phi_minus)`` of the off-diagonal entries of the last row."""
    m = M_m.r
    plus, minus = [], []
    for j in range(m - 1):
        sp = project_pm(M_m.entry(m - 1, j))
        plus.append(sp.plus)
        minus.append(sp.minus)
    return plus, minus


def auto_support(phi_minus: Sequence[SampledFunction], f_plus: SampledFunction,
                 energy: float = AUTO_ENERGY) -> float:
    """Smallest ``B`` with ``[-B, B)`` holding ``energy`` of the row spectra."""
    g = f_plus.grid
    xi = g.xi
    E = np.where(xi >= 0, np.abs(fourier_forward(f_plus).values) ** 2, 0.0)
    for phi in phi_minus:
        E = E + np.where(xi < 0, np.abs(fourier_forward(phi).values) ** 2, 0.0)
    order = np.argsort(np.abs(xi), kind="stable")
    cum = np.cumsum(E[order])
    if cum[-1] <= 0:
        return g.dxi
    k = int(np.searchsorted(cum, energy * cum[-1]))
    k = min(k, xi.size - 1)
    return float(max(abs(xi[order[k]]), g.dxi))


def build_completion_problem(
    phi_minus: Sequence[SampledFunction],
    f_plus_m: SampledFunction,
    bins: int,
    support: Optional[float] = None,
    leak_tol: float = DEFAULT_LEAK_TOL,
    eps_c0: float = 1e-10,
) -> CompletionProblem:
    """Discretize ``(phi_minus, f+_m)`` into an atom-modulated completion problem.

    Each ``phi_minus[j]`` is averaged over ``bins`` bins covering ``[-B, 0)``
    and ``f_plus_m`` over ``[0, B)``.  The bin width ``tau`` is rounded up to
    a multiple of the grid's frequency step, so the actual ``B = bins * tau``
    may slightly exceed the requested one.  ``support=None`` picks ``B`` from
    the row energy.
    """
    g = f_plus_m.grid
    bins = int(bins)
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    B_req = auto_support(phi_minus, f_plus_m) if support is None else float(support)
    K = max(1, math.ceil(B_req / g.dxi / bins - 1e-9))
    tau = K * g.dxi
    B = bins * tau
    if B > 0.5 * g.n * g.dxi:
        raise ValidationError(f"support B={B:.4g} exceeds the frequency window", B=B)
    rows = [interval_average_discretize(phi, (-B, 0.0), bins, sign=-1, leak_tol=math.inf)
            for phi in phi_minus]
    corner = interval_average_discretize(f_plus_m, (0.0, B), bins, sign=1, leak_tol=math.inf)
    total = 0.0
    leaked = 0.0
    xi = g.xi
    for row, fun, inside in [(r, p, (xi >= -B) & (xi < 0)) for r, p in zip(rows, phi_minus)] + [
        (corner, f_plus_m, (xi >= 0) & (xi < B))
    ]:
        e = np.abs(fourier_forward(fun).values) ** 2
        total += e.sum()
        leaked += e[~inside].sum()
    leak = float(leaked / total) if total > 0 else 0.0
    if leak > leak_tol:
        raise LeakageError(
            f"spectral energy fraction {leak:.3g} outside [-B, B) with B={B:.4g}; "
            "increase the support B", leaked_fraction=leak, B=B,
        )
    zeta = [r.modulation() for r in rows]
    p = CompletionProblem(len(rows) + 1, tau, bins, zeta, corner.modulation(), atom=True)
    fn = float(np.linalg.norm(corner.coeffs))
    if not abs(corner.coeffs[0]) >= eps_c0 * fn or fn == 0.0:
        raise DegenerateCornerError(
            f"corner coefficient degenerate: |c0|={abs(corner.coeffs[0]):.3g}",
            c0=complex(corner.coeffs[0]), f_norm=fn,
        )
    p.diagnostics.update(B=B, B_requested=B_req, tau=tau, bins=bins,
                         leaked_fraction=leak, grid_steps_per_bin=K)
    return p


def embed_block(U_m: UnitaryPolyMatrix, r: int, grid: Grid) -> MatrixFunction:
    """``diag(U_m, I_{r-m})`` evaluated on the time grid."""
    m = U_m.m
    if m > r:
        raise ValidationError(f"block size {m} exceeds matrix order {r}")
    out = np.zeros((grid.n, r, r), complex)
    out[:, :m, :m] = U_m(grid.t)
    idx = np.arange(m, r)
    out[:, idx, idx] = 1.0
    return MatrixFunction(grid, out)


@dataclass
class FactorizeParams:
    """Discretization and solver settings.

    ``bins`` is the bin count per step, or a list swept in order until the
    analyticity of the factor stops improving by ``sweep_gain``.
    ``support`` is the spectral half-width ``B``; ``None`` selects it from the
    row energy at every step.
    """

    bins: Union[int, Sequence[int]] = (4, 8, 16)
    support: Optional[float] = None
    leak_tol: float = DEFAULT_LEAK_TOL
    tol_tri: float = 1e-8
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep_gain: float = 0.1

    @classmethod
    def lattice_preset(cls, N: int, **kw) -> "FactorizeParams":
        """``N^2`` bins of width ``1/N`` on ``[-N, 0)``."""
        return cls(bins=N * N, support=float(N), **kw)

    def bins_list(self) -> list[int]:
        if isinstance(self.bins, (int, np.integer)):
            return [int(self.bins)]
        return [int(b) for b in self.bins]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bins"] = self.bins_list()
        return d


@dataclass
class StepResult:
    m: int
    M: MatrixFunction
    U: UnitaryPolyMatrix
    problem: CompletionProblem
    residuals: tuple
    invariant: float


@dataclass
class FactorizationReport:
    """Quality metrics of ``S+`` against ``S``; all invariant under ``S+ -> S+ Q``."""

    residual_l1: float
    analyticity: float
    analyticity_rows: list
    det_identity: float
    steps: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "residual_l1": self.residual_l1,
            "analyticity": self.analyticity,
            "analyticity_rows": list(self.analyticity_rows),
            "det_identity": self.det_identity,
            "steps": self.steps,
            "parameters": self.parameters,
            "sweep": self.sweep,
        }


def _lead(M: MatrixFunction, m: int) -> np.ndarray:
    return M.values[:, :m, :m]


def invariant_residual(S: MatrixFunction, M: MatrixFunction, m: int) -> float:
    """``max_t ||[S]_m - [M]_m [M]_m*||_F / max_t ||S||_F``."""
    A = _lead(M, m)
    E = S.values[:, :m, :m] - A @ np.conj(np.swapaxes(A, 1, 2))
    return float(np.max(np.linalg.norm(E, axis=(1, 2))) / np.max(np.linalg.norm(S.values, axis=(1, 2))))


def recursion_step(
    M_prev: MatrixFunction,
    m: int,
    params: FactorizeParams,
    bins: int,
    S: Optional[MatrixFunction] = None,
) -> StepResult:
    """Make the leading ``m x m`` block analytic: ``M_m = M_prev diag(U_m, I)``."""
    try:
        block = M_prev.block(m)
        _, phi_minus = split_bottom_row(block)
        f_plus = block.entry(m - 1, m - 1)
        p = build_completion_problem(phi_minus, f_plus, bins, params.support,
                                     params.leak_tol, params.solver.eps_c0)
        U = solve_completion(p, params.solver)
    except ContifactError as exc:
        exc.detail.setdefault("step", m)
        raise
    res = completion_residuals(p, U)
    M = M_prev @ embed_block(U, M_prev.r, M_prev.grid)
    inv = invariant_residual(S, M, m) if S is not None else float("nan")
    return StepResult(m, M, U, p, res, inv)


def det_identity(S: MatrixFunction, S_plus: MatrixFunction) -> float:
    dS = np.linalg.det(S.values).real
    dP = np.abs(np.linalg.det(S_plus.values)) ** 2
    return float(np.max(np.abs(dP - dS)) / np.max(np.abs(dS)))


def verify_factorization(S: MatrixFunction, S_plus: MatrixFunction,
                         sigma: Optional[float] = None) -> FactorizationReport:
    """Residual, analyticity and determinant checks for a candidate factor.

    ``analyticity`` is the negative-frequency energy fraction of
    ``S+ * w`` with the analytic weight of
    :func:`contifact.transforms.analytic_window`, pooled per row (and over
    all rows), so right multiplication by a constant unitary leaves it
    unchanged.
    """
    if S.values.shape != S_plus.values.shape or S.grid != S_plus.grid:
        raise ValidationError("density and factor shapes differ")
    g = S.grid
    E = S.values - S_plus.gram()
    res = float(np.sum(np.linalg.norm(E, axis=(1, 2))) / np.sum(np.linalg.norm(S.values, axis=(1, 2))))
    w = analytic_window(g, sigma)
    rows = [rho_minus(S_plus.values[:, i, :].T, g, w) for i in range(S.r)]
    overall = rho_minus(np.swapaxes(S_plus.values, 0, 2).reshape(-1, g.n), g, w)
    return FactorizationReport(res, overall, rows, det_identity(S, S_plus))


def _factorize_once(S: SpectralDensity, tri: TriangularFactor, params: FactorizeParams, bins: int):
    M = tri.M
    steps = []
    for m in range(2, S.r + 1):
        st = recursion_step(M, m, params, bins, S)
        bound = m * (params.solver.tol_unitary + params.tol_tri)
        steps.append({
            "m": m,
            "bins": bins,
            "tau": st.problem.tau,
            "B": st.problem.diagnostics.get("B"),
            "leaked_fraction": st.problem.diagnostics.get("leaked_fraction"),
            "residuals": list(st.residuals),
            "invariant": st.invariant,
            "invariant_bound": bound,
        })
        M = st.M
    return M, steps


def factorize(S: SpectralDensity, params: Optional[FactorizeParams] = None):
    """Approximate analytic factor ``S+`` with ``S+ S+* = S`` on the grid.

    Returns
    -------
    S_plus : MatrixFunction
    report : FactorizationReport
    """
    params = params or FactorizeParams()
    tri = triangular_factorize(S)
    info = {"T": S.grid.half_width, "n": S.grid.n, "r": S.r,
            "tri_residual": tri.residual(S), **{k: v for k, v in params.to_dict().items() if k != "solver"},
            "solver": asdict(params.solver)}
    if S.r == 1:
        Sp = tri.M
        rep = verify_factorization(S, Sp)
        rep.parameters = info
        return Sp, rep
    best = None
    sweep = []
    for bins in params.bins_list():
        Sp, steps = _factorize_once(S, tri, params, bins)
        rep = verify_factorization(S, Sp)
        rep.steps = steps
        sweep.append({"bins": bins, "residual_l1": rep.residual_l1, "analyticity": rep.analyticity,
                      "det_identity": rep.det_identity})
        prev = best
        best = (Sp, rep)
        if prev is not None and rep.analyticity > (1.0 - params.sweep_gain) * prev[1].analyticity:
            if rep.analyticity > prev[1].analyticity:
                best = prev
            break
    Sp, rep = best
    rep.parameters = info
    rep.sweep = sweep
    return Sp, rep
