"""Exception hierarchy.  Each class maps to one CLI exit code."""

from __future__ import annotations

import math
from typing import Any, Optional


class ContifactError(Exception):
    """Base class; ``detail`` is a JSON-serializable dict for error reports."""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.detail = detail

    def to_dict(self) -> dict:
        out = {"error": self.kind, "message": str(self)}
        out.update(_jsonable(self.detail))
        return out


class ValidationError(ContifactError, ValueError):
    kind = "validation"


class FileFormatError(ValidationError):
    kind = "file-format"


class DensityError(ValidationError):
    """Input density is not Hermitian or not positive definite."""

    kind = "density"


class PivotError(DensityError):
    """Pointwise Cholesky met a non-positive pivot."""

    kind = "pivot"

    def __init__(self, message: str, index: int, t: float, pivot: float, **detail):
        super().__init__(message, index=index, t=t, pivot=pivot, **detail)
        self.index = index
        self.t = t
        self.pivot = pivot


class PaleyWienerError(ContifactError):
    """The log-integrability condition fails; no spectral factor exists."""

    exit_code = 2
    kind = "paley-wiener"


class SolverError(ContifactError):
    """Completion solver did not meet its residual contract."""

    exit_code = 3
    kind = "solver"

    def __init__(self, message: str, residuals: Optional[tuple] = None, **detail):
        super().__init__(message, residuals=residuals, **detail)
        self.residuals = residuals


class DegenerateCornerError(SolverError):
    kind = "degenerate-corner"


class LeakageError(SolverError):
    kind = "leakage"


class OracleFailure(ContifactError):
    """A test oracle gave up (budget exhausted or precondition violated)."""

    kind = "oracle"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
