"""Driver configuration and the report every factorization returns."""
from __future__ import annotations

import json
import math
import os
import platform
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__


def default_threads() -> int:
    env = os.environ.get("MSF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@dataclass
class FactorConfig:
    """Tuning knobs shared by the classic and doubling drivers.

    ``eps_tail`` is the relative threshold of the tail rule choosing the
    truncation order ``N``; ``n_max`` optionally caps it below ``N_g/2``.
    ``validate`` asks the completion builder to measure its post-conditions,
    ``diagnostics`` records the paraunitarity residual of every applied ``U`` on
    the working grid, and ``debug`` checks the stage/level invariants.
    The two ``tol_*`` fields are the completion post-condition thresholds
    used when ``validate`` is on.  ``unitary_snap`` replaces each applied ``U(z_j)`` by its polar factor.
    """

    eps_tail: float = 1e-14
    n_max: int | None = None
    threads: int = field(default_factory=default_threads)
    validate: bool = False
    diagnostics: bool = True
    debug: bool = False
    keep_history: bool = False
    unitary_snap: bool = True
    tol_paraunitary: float = 1e-10
    tol_analytic: float = 1e-9

    def __post_init__(self):
        if not (self.eps_tail > 0):
            raise ValueError("eps_tail must be positive")
        if self.n_max is not None and self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        if not (self.tol_paraunitary > 0 and self.tol_analytic > 0):
            raise ValueError("tolerances must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class FactorReport:
    algorithm: str
    r: int
    n_grid: int
    C1: float = math.nan
    C2: float = math.nan
    outer_gap: float | None = None
    paraunitary_residuals: list = field(default_factory=list)
    orders: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    pad_count: int = 0
    checks: list = field(default_factory=list)
    history: list | None = None
    failure: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("history")
        d["library_version"] = __version__
        d["machine"] = machine_descriptor()
        return _jsonable(d)

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kw)


def machine_descriptor() -> str:
    return (f"{platform.system()} {platform.machine()} | python {platform.python_version()}"
            f" | numpy {np.__version__} | cpus {os.cpu_count()}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
