"""Command line front end: ``msfact generate | factorize | verify | bench``.

Exit codes: 0 on success, 2 for usage, configuration and file-format errors,
3 when the factorization itself fails numerically.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bench import ALGORITHMS, GeneratorConfig, benchmark, generate_density
from .errors import DimensionError, FormatError, MSFError
from .formats import read_any, write_msfc, write_msfg
from .laurent import GridSamples, LaurentMatrixPoly, from_grid, is_power_of_two, sample
from .metrics import apply_gauge, metric_c1, metric_c2, outer_check
from .report import FactorConfig, default_threads, machine_descriptor

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    subcommand: str
    input: str | None = None
    factor: str | None = None
    out: str | None = None
    out_coeffs: str | None = None
    report: str | None = None
    algorithm: str = "doubling"
    grid: int | None = None
    eps_tail: float = 1e-14
    tol_analytic: float = 1e-9
    tol_paraunitary: float = 1e-10
    threads: int = 1
    seed: int = 0
    normalize: bool = False

    def __post_init__(self):
        if self.grid is not None and (self.grid < 2 or not is_power_of_two(self.grid)):
            raise UsageError(f"grid size {self.grid} is not a power of two >= 2")
        for name in ("eps_tail", "tol_analytic", "tol_paraunitary"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.threads < 1:
            raise UsageError("thread count must be >= 1")

    def factor_config(self, **kw) -> FactorConfig:
        return FactorConfig(eps_tail=self.eps_tail, threads=self.threads,
                            tol_analytic=self.tol_analytic,
                            tol_paraunitary=self.tol_paraunitary, **kw)


def _threads(value):
    # an explicit flag wins over MSF_THREADS
    return value if value is not None else default_threads()


def _emit(doc: dict, path: str | None):
    text = json.dumps(doc, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _read_density(path) -> GridSamples:
    obj = read_any(path)
    if not isinstance(obj, GridSamples):
        raise UsageError(f"{path}: expected grid samples (MSFG), got coefficients")
    return obj


def cmd_generate(args) -> int:
    cfg = CliConfig("generate", out=args.out, grid=args.grid, seed=args.seed)
    try:
        gen = GeneratorConfig(args.r, args.order, args.grid, args.seed, args.low, args.high, args.real)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_msfg(cfg.out, generate_density(gen))
    return EXIT_OK


def cmd_factorize(args) -> int:
    cfg = CliConfig("factorize", input=args.input, out=args.out, out_coeffs=args.out_coeffs,
                    report=args.report, algorithm=args.algorithm, eps_tail=args.eps_tail,
                    tol_analytic=args.tol_analytic, tol_paraunitary=args.tol_paraunitary,
                    threads=_threads(args.threads), normalize=args.normalize)
    S = _read_density(cfg.input)
    fcfg = cfg.factor_config(n_max=args.n_max, validate=args.validate, debug=args.debug)
    try:
        P, rep = ALGORITHMS[cfg.algorithm](S, fcfg)
    except MSFError as exc:
        failure = {"algorithm": cfg.algorithm, "error": str(exc)}
        for key in ("stage", "block", "k"):
            if hasattr(exc, key):
                failure[key] = getattr(exc, key)
        _emit({"failure": failure, "library_version": __version__}, cfg.report)
        print(f"factorization failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.normalize:
        P = apply_gauge(P)
        rep.C1, rep.C2 = metric_c1(S, P), metric_c2(P)
    try:
        rep.outer_gap = outer_check(P)
    except MSFError:
        rep.outer_gap = None
    if cfg.out:
        write_msfg(cfg.out, P)
    if cfg.out_coeffs:
        # the whole transform as a band, so resampling reproduces the grid values
        write_msfc(cfg.out_coeffs, from_grid(P, P.n_grid // 2 - 1, P.n_grid // 2))
    doc = rep.to_dict()
    doc["normalized"] = cfg.normalize
    _emit(doc, cfg.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    S = _read_density(args.input)
    F = read_any(args.factor)
    if isinstance(F, LaurentMatrixPoly):
        if F.r != S.r:
            raise DimensionError(f"factor is {F.r}x{F.r}, density is {S.r}x{S.r}")
        F = GridSamples(sample(F, S.n_grid))
    if F.r != S.r or F.n_grid != S.n_grid:
        raise DimensionError(f"factor shape (r={F.r}, N_g={F.n_grid}) does not match "
                             f"density (r={S.r}, N_g={S.n_grid})")
    try:
        gap = outer_check(F)
    except MSFError:
        gap = None
    doc = {"r": S.r, "n_grid": S.n_grid, "C1": metric_c1(S, F), "C2": metric_c2(F),
           "outer_gap": gap, "library_version": __version__}
    _emit(doc, args.report)
    return EXIT_OK


def cmd_bench(args) -> int:
    threads = _threads(args.threads)
    for name in args.algorithms:
        if name not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {name!r}")
    rs = args.r
    try:
        gen = GeneratorConfig(rs[0], args.order, args.grid, args.seed, real=args.real)
        for r in rs:
            GeneratorConfig(r, args.order, args.grid, args.seed)
        cfg = FactorConfig(eps_tail=args.eps_tail, threads=threads, diagnostics=False)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = benchmark(gen, tuple(args.algorithms), cfg, repeats=args.repeats,
                    warmup=not args.no_warmup, r_values=rs)
    doc["machine"] = machine_descriptor()
    _emit(_strip(doc), args.out)
    return EXIT_OK


def _strip(obj):
    if isinstance(obj, dict):
        return {k: _strip(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strip(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _pow2(text):
    n = int(text)
    if n < 2 or not is_power_of_two(n):
        raise argparse.ArgumentTypeError(f"{n} is not a power of two >= 2")
    return n


def _positive(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _count(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msfact", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"msfact {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random density S = P P^H as MSFG")
    g.add_argument("--r", type=_count, required=True, help="matrix dimension")
    g.add_argument("--order", type=int, required=True, help="polynomial order n of P")
    g.add_argument("--grid", type=_pow2, required=True, help="number of grid nodes N_g")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--low", type=float, default=-1.0)
    g.add_argument("--high", type=float, default=1.0)
    g.add_argument("--real", action="store_true", help="real coefficients only")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def tuning(p):
        p.add_argument("--eps-tail", type=_positive, default=1e-14,
                       help="relative threshold for the truncation order (default 1e-14)")
        p.add_argument("--threads", type=_count, default=None,
                       help="worker threads (default: MSF_THREADS or 1)")

    f = sub.add_parser("factorize", help="compute the spectral factor of an MSFG density")
    f.add_argument("input")
    f.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="doubling")
    f.add_argument("--out", help="factor samples (MSFG)")
    f.add_argument("--out-coeffs", help="factor coefficients, powers 1-N_g/2 .. N_g/2 (MSFC)")
    f.add_argument("--report", help="JSON report path (default: stdout)")
    f.add_argument("--normalize", action="store_true",
                   help="rotate so the constant coefficient is lower triangular with positive diagonal")
    f.add_argument("--n-max", type=int, default=None, help="cap on the truncation order")
    f.add_argument("--tol-analytic", type=_positive, default=1e-9)
    f.add_argument("--tol-paraunitary", type=_positive, default=1e-10)
    f.add_argument("--validate", action="store_true", help="check every completion's post-conditions")
    f.add_argument("--debug", action="store_true", help="check stage/level invariants")
    tuning(f)
    f.set_defaults(func=cmd_factorize)

    v = sub.add_parser("verify", help="recompute C1, C2 and the outer gap of a factor")
    v.add_argument("input", help="density (MSFG)")
    v.add_argument("factor", help="factor (MSFG or MSFC)")
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time classic against doubling on identical densities")
    b.add_argument("--r", type=_count, nargs="+", default=[16, 32, 64])
    b.add_argument("--order", type=int, default=10)
    b.add_argument("--grid", type=_pow2, default=512)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--real", action="store_true")
    b.add_argument("--algorithms", nargs="+", default=["classic", "doubling"])
    b.add_argument("--repeats", type=_count, default=1)
    b.add_argument("--no-warmup", action="store_true")
    b.add_argument("--out")
    tuning(b)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, FormatError, DimensionError, OSError, ValueError) as exc:
        print(f"msfact {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MSFError as exc:
        print(f"msfact {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
