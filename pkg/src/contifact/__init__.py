"""Spectral factorization of positive definite matrix densities on the real line."""

from .completion import (
    CompletionProblem,
    SolverConfig,
    UnitaryPolyMatrix,
    build_analyticity_system,
    completion_residuals,
    solve_completion,
)
from .errors import (
    ContifactError,
    DegenerateCornerError,
    DensityError,
    FileFormatError,
    LeakageError,
    OracleFailure,
    PaleyWienerError,
    PivotError,
    SolverError,
    ValidationError,
)
from .grid import Grid, SampledFunction, fourier_forward, fourier_inverse, quadrature_l1
from .oracles import RationalMatrixSpec, preset, synth_density, unitary_quotient_deviation
from .pipeline import (
    FactorizationReport,
    FactorizeParams,
    MatrixFunction,
    SpectralDensity,
    factorize,
    triangular_factorize,
    verify_factorization,
)
from .scalar import PwReport, outer_factor, paley_wiener_check
from .transforms import hilbert, interval_average_discretize, project_pm, translate
from .trigpoly import EtauFunction, TrigPoly, conj_bar, etau, eval_on_grid, poly_mul

__version__ = "0.1.0"

__all__ = [
    "CompletionProblem",
    "ContifactError",
    "DegenerateCornerError",
    "DensityError",
    "EtauFunction",
    "FactorizationReport",
    "FactorizeParams",
    "FileFormatError",
    "Grid",
    "LeakageError",
    "MatrixFunction",
    "OracleFailure",
    "PaleyWienerError",
    "PivotError",
    "PwReport",
    "RationalMatrixSpec",
    "SampledFunction",
    "SolverConfig",
    "SolverError",
    "SpectralDensity",
    "TrigPoly",
    "UnitaryPolyMatrix",
    "ValidationError",
    "build_analyticity_system",
    "completion_residuals",
    "conj_bar",
    "etau",
    "eval_on_grid",
    "factorize",
    "fourier_forward",
    "fourier_inverse",
    "hilbert",
    "interval_average_discretize",
    "outer_factor",
    "paley_wiener_check",
    "poly_mul",
    "preset",
    "project_pm",
    "quadrature_l1",
    "solve_completion",
    "synth_density",
    "translate",
    "triangular_factorize",
    "unitary_quotient_deviation",
    "verify_factorization",
]
