"""Density files, run configuration and report output.

Three encodings hold an ``(n, r, r)`` complex array on a :class:`Grid`:

* ``.json``: header and a flat payload of ``(re, im)`` pairs, row-major per
  grid point;
* ``.bin``: raw little-endian float64 payload in the same order, with the
  header in a ``.bin.json`` sidecar;
* ``.csv``: one row per grid point, columns ``t, re_ij, im_ij``.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np

from .completion import SolverConfig
from .errors import FileFormatError, ValidationError
from .grid import Grid
from .pipeline import FactorizeParams

FORMAT_NAME = "contifact-matrix"
FORMAT_VERSION = 1
PathLike = Union[str, os.PathLike]


@dataclass(eq=False)
class DensityFile:
    grid: Grid
    values: np.ndarray
    kind: str = "density"
    hermitian_tol: float = 1e-10
    meta: dict = field(default_factory=dict)

    @property
    def r(self) -> int:
        return self.values.shape[1]

    @property
    def hermitian(self) -> bool:
        v = self.values
        scale = float(np.max(np.abs(v))) or 1.0
        return float(np.max(np.abs(v - np.conj(np.swapaxes(v, 1, 2))))) <= self.hermitian_tol * scale

    def header(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "r": self.r,
            "grid": self.grid.to_dict(),
            "hermitian_tol": self.hermitian_tol,
            "hermitian": self.hermitian,
            "meta": self.meta,
        }


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """Write via a temporary file in the target directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: PathLike, obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, default=_default) + "\n")


def _default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _flat(values: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.complex128).view(np.float64).ravel()


def _unflat(payload: np.ndarray, n: int, r: int) -> np.ndarray:
    expected = n * r * r * 2
    if payload.size != expected:
        raise FileFormatError(
            f"payload has {payload.size} numbers, header implies {expected}",
            expected=expected, found=int(payload.size),
        )
    return payload.astype(np.float64).view(np.complex128).reshape(n, r, r)


def _format_of(path: Path, fmt: Optional[str]) -> str:
    if fmt:
        return fmt
    name = path.name.lower()
    if name.endswith(".bin"):
        return "bin"
    if name.endswith(".csv"):
        return "csv"
    return "json"


def write_density(path: PathLike, df: DensityFile, fmt: Optional[str] = None) -> None:
    path = Path(path)
    fmt = _format_of(path, fmt)
    if fmt == "json":
        doc = df.header()
        doc["encoding"] = "json"
        doc["payload"] = _flat(df.values).tolist()
        atomic_write_text(path, json.dumps(doc))
    elif fmt == "bin":
        head = df.header()
        head["encoding"] = "float64-le"
        atomic_write_bytes(path, _flat(df.values).astype("<f8").tobytes())
        atomic_write_text(sidecar(path), json.dumps(head, indent=2))
    elif fmt == "csv":
        atomic_write_text(path, _to_csv(df))
    else:
        raise ValidationError(f"unknown file format {fmt!r}")


def sidecar(path: PathLike) -> Path:
    return Path(str(path) + ".json")


def _read_header(head: dict, path: Path) -> tuple[Grid, int]:
    if head.get("format") != FORMAT_NAME:
        raise FileFormatError(f"{path}: not a {FORMAT_NAME} file")
    if int(head.get("version", -1)) > FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported version {head.get('version')}")
    try:
        g = head["grid"]
        grid = Grid(float(g["t_min"]), float(g["t_max"]), int(g["n"]))
        r = int(head["r"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed header ({exc})") from exc
    if r < 1:
        raise FileFormatError(f"{path}: r must be positive")
    return grid, r


def read_density(path: PathLike, fmt: Optional[str] = None) -> DensityFile:
    """Read any of the three encodings; raises :class:`FileFormatError` on bad input."""
    path = Path(path)
    fmt = _format_of(path, fmt)
    try:
        if fmt == "csv":
            return _from_csv(path)
        if fmt == "bin":
            head = json.loads(sidecar(path).read_text())
            grid, r = _read_header(head, path)
            raw = path.read_bytes()
            if len(raw) % 8:
                raise FileFormatError(f"{path}: payload is not a whole number of float64 values")
            payload = np.frombuffer(raw, dtype="<f8")
        else:
            head = json.loads(path.read_text())
            grid, r = _read_header(head, path)
            payload = np.asarray(head.get("payload", []), dtype=np.float64)
    except FileNotFoundError as exc:
        raise FileFormatError(f"cannot read {exc.filename}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc
    values = _unflat(payload, grid.n, r)
    return DensityFile(grid, values, head.get("kind", "density"),
                       float(head.get("hermitian_tol", 1e-10)), head.get("meta", {}))


def _csv_columns(r: int) -> list[str]:
    cols = ["t"]
    for i in range(r):
        for j in range(r):
            cols += [f"re_{i}{j}", f"im_{i}{j}"]
    return cols


def _to_csv(df: DensityFile) -> str:
    import io as _io

    buf = _io.StringIO()
    buf.write(f"# {json.dumps(df.header())}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_csv_columns(df.r))
    flat = df.values.reshape(df.grid.n, -1)
    for t, row in zip(df.grid.t, flat):
        out = [repr(float(t))]
        for z in row:
            out += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(out)
    return buf.getvalue()


def _from_csv(path: Path) -> DensityFile:
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise FileFormatError(f"{path}: CSV file lacks the header comment")
    try:
        head = json.loads(lines[0][2:])
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: bad CSV header ({exc})") from exc
    grid, r = _read_header(head, path)
    rows = list(csv.reader(lines[1:]))
    if not rows or rows[0] != _csv_columns(r):
        raise FileFormatError(f"{path}: unexpected CSV columns")
    body = rows[1:]
    if len(body) != grid.n or any(len(row) != 1 + 2 * r * r for row in body):
        raise FileFormatError(f"{path}: expected {grid.n} rows of {1 + 2 * r * r} columns")
    try:
        data = np.array([[float(v) for v in row[1:]] for row in body])
    except ValueError as exc:
        raise FileFormatError(f"{path}: non-numeric CSV field ({exc})") from exc
    values = _unflat(data.ravel(), grid.n, r)
    return DensityFile(grid, values, head.get("kind", "density"),
                       float(head.get("hermitian_tol", 1e-10)), head.get("meta", {}))


@dataclass
class RunConfig:
    """Parameters of a CLI run; field names double as kebab-case flags."""

    T: float = 512.0
    n: int = 65536
    bins: list = field(default_factory=lambda: [4, 8, 16])
    support: Optional[float] = None
    tol_unitary: float = 1e-8
    tol_det: float = 1e-8
    tol_analytic: float = 1e-8
    tol_tri: float = 1e-8
    eps_c0: float = 1e-10
    leak_tol: float = 1e-3
    seed: int = 0
    max_iter: int = 200
    restarts: int = 8
    method: str = "linear"
    perturb_corner: bool = False

    def validate(self) -> "RunConfig":
        for name in ("tol_unitary", "tol_det", "tol_analytic", "tol_tri", "eps_c0", "leak_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ValidationError(f"{name} must be positive, got {v!r}")
        if not self.T > 0:
            raise ValidationError("T must be positive")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValidationError(f"n must be a power of two, got {self.n}")
        if not self.bins or any(int(b) < 1 for b in self.bins):
            raise ValidationError("bins must be a non-empty list of positive integers")
        if self.support is not None and not self.support > 0:
            raise ValidationError("support must be positive or omitted")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValidationError("solver budgets must be positive")
        SolverConfig(method=self.method)
        return self

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        norm = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(norm) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**norm)
        if isinstance(cfg.bins, int):
            cfg.bins = [cfg.bins]
        return cfg.validate()

    @classmethod
    def from_file(cls, path: PathLike) -> "RunConfig":
        try:
            return cls.from_mapping(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc

    def solver(self) -> SolverConfig:
        return SolverConfig(self.tol_unitary, self.tol_det, self.tol_analytic, self.eps_c0,
                            self.max_iter, self.restarts, self.seed, self.method,
                            self.perturb_corner)

    def factorize_params(self, bins: Optional[Sequence[int]] = None) -> FactorizeParams:
        return FactorizeParams(bins=list(bins or self.bins), support=self.support,
                               leak_tol=self.leak_tol, tol_tri=self.tol_tri,
                               solver=self.solver())

    def to_dict(self) -> dict:
        return asdict(self)
