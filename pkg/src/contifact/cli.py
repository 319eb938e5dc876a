"""Command-line driver.

Exit codes: 0 success, 1 input/validation error, 2 the density fails the
Paley-Wiener condition, 3 the completion solver failed.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import ContifactError, ValidationError
from .grid import Grid, SampledFunction, fourier_forward, fourier_inverse
from .io import DensityFile, RunConfig, atomic_write_text, read_density, write_density, write_json
from .oracles import PRESETS, preset
from .pipeline import MatrixFunction, SpectralDensity, factorize, verify_factorization
from .transforms import hilbert, project_pm

THREADS_ENV = "CONTIFACT_THREADS"


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return nullcontext()
    try:
        k = int(raw)
        if k < 1:
            raise ValueError
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=k)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    g.add_argument("--bins", type=int, nargs="+", help="bins per step, or a sweep list")
    g.add_argument("--support", type=float, help="spectral half-width B (default: automatic)")
    for name in ("tol-unitary", "tol-det", "tol-analytic", "tol-tri", "eps-c0", "leak-tol"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--restarts", type=int)
    g.add_argument("--method", choices=["linear", "nls"])
    g.add_argument("--perturb-corner", action="store_true", default=None)


def _config(args) -> RunConfig:
    base = RunConfig.from_file(args.config).to_dict() if getattr(args, "config", None) else {}
    for key in RunConfig().to_dict():
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    return RunConfig.from_mapping(base)


def _density(path: Path) -> SpectralDensity:
    df = read_density(path)
    return SpectralDensity(df.grid, df.values, df.hermitian_tol)


def cmd_synth(args) -> int:
    grid = Grid.symmetric(args.T, args.n)
    RunConfig(T=args.T, n=args.n).validate()
    S, A = preset(args.preset, grid)
    meta = {"preset": args.preset}
    write_density(args.out, DensityFile(grid, S.values, "density", meta=meta), args.format)
    if args.oracle and A is not None:
        write_density(args.oracle, DensityFile(grid, A.values, "factor", meta=meta), args.format)
    elif args.oracle:
        print(f"preset {args.preset} has no closed-form factor; no oracle written", file=sys.stderr)
    return 0


def cmd_factorize(args) -> int:
    cfg = _config(args)
    S = _density(args.input)
    Sp, rep = factorize(S, cfg.factorize_params())
    write_density(args.out, DensityFile(S.grid, Sp.values, "factor",
                                        meta={"source": str(args.input)}))
    doc = rep.to_dict()
    doc["config"] = cfg.to_dict()
    if args.report:
        write_json(args.report, doc)
    else:
        print(json.dumps(doc, indent=2, default=str))
    return 0


def cmd_verify(args) -> int:
    S = _density(args.density)
    F = read_density(args.factor)
    if F.r != S.r or F.grid != S.grid:
        raise ValidationError(
            f"factor (r={F.r}, n={F.grid.n}) does not match density (r={S.r}, n={S.grid.n})"
        )
    rep = verify_factorization(S, MatrixFunction(F.grid, F.values))
    if args.report:
        write_json(args.report, rep.to_dict())
    else:
        print(json.dumps(rep.to_dict(), indent=2))
    return 0


def cmd_convergence(args) -> int:
    cfg = _config(args)
    S = _density(args.input)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "residual_l1", "analyticity", "det_identity", "wall_time"])
    for N in cfg.bins:
        t0 = time.perf_counter()
        _, rep = factorize(S, cfg.factorize_params([N]))
        w.writerow([N, repr(rep.residual_l1), repr(rep.analyticity), repr(rep.det_identity),
                    f"{time.perf_counter() - t0:.6f}"])
    if args.csv:
        atomic_write_text(args.csv, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_transform(args) -> int:
    df = read_density(args.input)
    i, j = args.entry
    if not (0 <= i < df.r and 0 <= j < df.r):
        raise ValidationError(f"entry ({i}, {j}) outside a {df.r}x{df.r} matrix")
    f = SampledFunction(df.grid, df.values[:, i, j])
    if args.op == "forward":
        out = fourier_forward(f)
    elif args.op == "inverse":
        out = fourier_inverse(SampledFunction(df.grid, f.values, "frequency"))
    elif args.op == "plus":
        out = project_pm(f).plus
    elif args.op == "minus":
        out = project_pm(f).minus
    else:
        out = hilbert(f)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi" if out.domain == "frequency" else "t", "re", "im"])
    for x, z in zip(out.abscissa, out.values):
        w.writerow([repr(float(x)), repr(float(z.real)), repr(float(z.imag))])
    if args.out:
        atomic_write_text(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="contifact", description="Matrix spectral factorization on the real line.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a test density and its closed-form factor")
    p.add_argument("--preset", choices=PRESETS, default="rational-2x2")
    p.add_argument("--T", type=float, default=512.0, help="window half width")
    p.add_argument("--n", type=int, default=65536, help="samples (power of two)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--oracle", type=Path)
    p.add_argument("--format", choices=["json", "bin", "csv"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("factorize", help="compute a spectral factor")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path)
    _add_config_flags(p)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("verify", help="report quality metrics of a factor")
    p.add_argument("density", type=Path)
    p.add_argument("factor", type=Path)
    p.add_argument("--report", type=Path)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convergence", help="factorize over a list of bin counts")
    p.add_argument("input", type=Path)
    p.add_argument("--csv", type=Path)
    _add_config_flags(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("transform", help="apply F, F^-1, P+, P- or H to one entry")
    p.add_argument("input", type=Path)
    p.add_argument("--op", choices=["forward", "inverse", "plus", "minus", "hilbert"], required=True)
    p.add_argument("--entry", type=int, nargs=2, default=(0, 0), metavar=("I", "J"))
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_transform)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except ContifactError as exc:
        print(json.dumps(exc.to_dict(), default=str), file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
