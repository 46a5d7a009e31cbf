"""Random test densities and the classic-vs-doubling timing harness.

Densities are ``S(z) = P(z) P(z)^H`` with ``P(z) = sum_{k=0}^{n} A_k z^k`` and
entries of ``A_k`` uniform on ``[low, high]``.  Draws come from numpy's
``Philox`` counter-based generator so a seed reproduces the same matrices on
every platform; real parts of all ``A_k`` are drawn first, then imaginary
parts.
"""
from __future__ import annotations

import gc
import hashlib
import time
from dataclasses import asdict, dataclass

import numpy as np

from .classic import classic_factorize
from .doubling import doubling_factorize
from .laurent import GridSamples, grid_values, is_power_of_two
from .metrics import outer_check
from .report import FactorConfig, machine_descriptor

ALGORITHMS = {"classic": classic_factorize, "doubling": doubling_factorize}


@dataclass(frozen=True)
class GeneratorConfig:
    r: int
    n: int
    n_grid: int
    seed: int = 0
    low: float = -1.0
    high: float = 1.0
    real: bool = False

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.n < 0:
            raise ValueError("polynomial order n must be >= 0")
        if not is_power_of_two(self.n_grid) or self.n_grid < 2 * (self.n + 1):
            raise ValueError(
                f"grid size must be a power of two >= 2(n+1) = {2 * (self.n + 1)}, got {self.n_grid}"
            )
        if not self.low < self.high:
            raise ValueError("need low < high")


def draw_coefficients(cfg: GeneratorConfig) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    shape = (cfg.n + 1, cfg.r, cfg.r)
    A = rng.uniform(cfg.low, cfg.high, size=shape).astype(complex)
    if not cfg.real:
        A = A + 1j * rng.uniform(cfg.low, cfg.high, size=shape)
    return A


def density_from_polynomial(coeffs, n_grid: int) -> GridSamples:
    """Samples of ``P P^H`` for the analytic polynomial with coefficients ``coeffs[k]``."""
    A = np.asarray(coeffs, dtype=complex)
    if A.ndim == 2:
        A = A[None]
    if A.shape[0] > n_grid:
        raise ValueError("polynomial degree does not fit the grid")
    buf = np.zeros((n_grid,) + A.shape[1:], dtype=complex)
    buf[: A.shape[0]] = A
    P = grid_values(buf)
    S = P @ np.conj(np.swapaxes(P, 1, 2))
    return GridSamples(0.5 * (S + np.conj(np.swapaxes(S, 1, 2))))


def generate_density(cfg: GeneratorConfig) -> GridSamples:
    return density_from_polynomial(draw_coefficients(cfg), cfg.n_grid)


def checksum(S: GridSamples) -> str:
    return hashlib.sha256(np.ascontiguousarray(S.values).tobytes()).hexdigest()


def _timed(fn, S, cfg, repeats):
    times = []
    out = None
    for _ in range(repeats):
        gc.collect()
        t = time.perf_counter()
        out = fn(S, cfg)
        times.append(time.perf_counter() - t)
    return out, times


def benchmark(gen: GeneratorConfig, algorithms=("classic", "doubling"), cfg: FactorConfig | None = None,
              repeats: int = 1, warmup: bool = True, r_values=None) -> dict:
    """Time the requested algorithms on identical densities.

    With ``r_values`` a scaling table over several matrix sizes is produced
    (each row regenerates the density with that ``r`` and the same seed).
    """
    cfg = cfg or FactorConfig(diagnostics=False)
    sizes = list(r_values) if r_values else [gen.r]
    if warmup:
        small = generate_density(GeneratorConfig(2, min(gen.n, 1), 8, gen.seed))
        for name in algorithms:
            ALGORITHMS[name](small, cfg)
    rows = []
    for r in sizes:
        g = GeneratorConfig(r, gen.n, gen.n_grid, gen.seed, gen.low, gen.high, gen.real)
        S = generate_density(g)
        digest = checksum(S)
        row = {"r": r, "checksum": digest}
        for name in algorithms:
            (P, rep), times = _timed(ALGORITHMS[name], S, cfg, repeats)
            if checksum(S) != digest:
                raise RuntimeError("input density was modified during the benchmark")
            try:
                gap = outer_check(P)
            except Exception:
                gap = None
            row[name] = {
                "time": min(times),
                "times": times,
                "C1": rep.C1,
                "C2": rep.C2,
                "outer_gap": gap,
                "max_N": _max_order(rep.orders),
                "timings": rep.timings,
            }
        if "classic" in row and "doubling" in row:
            row["ratio"] = row["classic"]["time"] / row["doubling"]["time"]
        rows.append(row)
    out = {
        "generator": asdict(gen),
        "config": asdict(cfg),
        "algorithms": list(algorithms),
        "repeats": repeats,
        "machine": machine_descriptor(),
        "table": rows,
    }
    if len(rows) == 1 and "ratio" in rows[0]:
        out["ratio"] = rows[0]["ratio"]
    return out


def _max_order(orders):
    vals = [o["N"] if isinstance(o, dict) else o for o in orders]
    return max(vals) if vals else 0
