"""Block-doubling driver.

After the triangular seed every 1x1 diagonal entry is analytic.  Level ``M``
(M = 1, 2, 4, ...) pairs neighbouring ``M x M`` diagonal blocks into
superblocks of size ``2M`` and repairs each superblock with one ``m = 2``
block completion.  Superblocks of one level touch disjoint column ranges and
run concurrently.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from .classic import (
    analytic_residual,
    apply_completion,
    choose_order,
    classic_factorize,
    finish_report,
    negative_part,
)
from .errors import LevelFailedError, MSFError
from .laurent import GridSamples, grid_coefficients
from .metrics import constant_unitary_gap, metric_c1
from .report import FactorConfig, FactorReport
from .seed import seed


def pad_to_pow2(S: GridSamples):
    """Embed ``S`` in the leading block of a ``2^p``-dimensional density padded with ``I``."""
    r = S.r
    R = 1 << (r - 1).bit_length()
    if R == r:
        return S, 0
    v = np.zeros((S.n_grid, R, R), dtype=complex)
    v[:, :r, :r] = S.values
    idx = np.arange(r, R)
    v[:, idx, idx] = 1.0
    return GridSamples(v), R - r


def strip_padding(P: GridSamples, pad_count: int) -> GridSamples:
    if not pad_count:
        return P
    r = P.r - pad_count
    return GridSamples(P.values[:, :r, :r].copy())


def _superblock(Q: np.ndarray, M: int, k: int, cfg: FactorConfig):
    c0 = 2 * M * k
    c1, c2 = c0 + M, c0 + 2 * M
    cz = grid_coefficients(Q[:, c1:c2, c0:c1])
    cf = grid_coefficients(Q[:, c1:c2, c1:c2])
    N = choose_order(cz, cfg)
    zetas = negative_part(cz, N)[None]
    pf, Ug = apply_completion(zetas, cf[: N + 1], Q.shape[0], cfg)
    # rows above c0 vanish in these columns, so only the lower part is multiplied
    Q[:, c0:, c0:c2] = Q[:, c0:, c0:c2] @ Ug
    res = None
    if cfg.diagnostics:
        res = float(np.abs(Ug @ np.conj(np.swapaxes(Ug, 1, 2)) - np.eye(2 * M)).max())
    return N, res, pf


def _check_disjoint(M: int, count: int):
    spans = sorted((2 * M * k, 2 * M * (k + 1)) for k in range(count))
    for (_, b), (a, _) in zip(spans, spans[1:]):
        if a < b:
            raise AssertionError(f"superblock column ranges overlap at level {M}")


def _check_level(S, Q, size, reference):
    R = Q.shape[1]
    worst = 0.0
    for b in range(0, R, size):
        blk = slice(b, b + size)
        worst = max(worst, analytic_residual(Q[:, blk, blk]))
        if np.any(Q[:, blk, b + size :] != 0):
            raise AssertionError(f"block size {size}: entries above the block diagonal are nonzero")
    c1 = metric_c1(S, Q)
    if c1 > 10 * reference + 1e-12 * max(np.abs(S).max(), 1.0):
        raise AssertionError(f"block size {size}: QQ^H drifted from S ({c1:.3e})")
    return {"block": size, "diagonal_analytic_residual": worst, "C1": c1}


def doubling_factorize(S: GridSamples, cfg: FactorConfig | None = None):
    """Spectral factor of ``S`` by the block-doubling recursion.

    Returns ``(S_plus, report)``; any identity padding is removed from
    ``S_plus``.
    """
    cfg = cfg or FactorConfig()
    t_start = time.perf_counter()
    Sp, pad = pad_to_pow2(S)
    R, ng = Sp.r, Sp.n_grid
    rep = FactorReport("doubling", S.r, ng, config=asdict(cfg), pad_count=pad)
    history = [] if cfg.keep_history else None

    t = time.perf_counter()
    Q = seed(Sp).Q.values.copy()
    rep.timings["seed"] = time.perf_counter() - t
    reference = metric_c1(Sp.values, Q) if cfg.debug else None

    levels = {}
    M = 1
    while M < R:
        t = time.perf_counter()
        count = R // (2 * M)
        if cfg.debug:
            _check_disjoint(M, count)
        workers = min(cfg.threads, count)

        def task(k, M=M):
            try:
                return _superblock(Q, M, k, cfg)
            except MSFError as exc:
                raise LevelFailedError(M, k, exc) from exc

        try:
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(task, range(count)))
            else:
                results = [task(k) for k in range(count)]
        except LevelFailedError as exc:
            rep.failure = {"block": exc.block, "k": exc.k, "error": str(exc.cause)}
            raise
        for k, (N, res, pf) in enumerate(results):
            rep.orders.append({"block": M, "k": k, "N": N})
            if res is not None:
                rep.paraunitary_residuals.append(res)
            if history is not None:
                history.append({"block": M, "k": k, "N": N, "U": pf.U})
        levels[str(2 * M)] = time.perf_counter() - t
        if cfg.debug:
            rep.checks.append(_check_level(Sp.values, Q, 2 * M, reference))
        M *= 2
    rep.timings["levels"] = levels
    rep.timings["stages"] = sum(levels.values())

    rep.history = history
    P = strip_padding(GridSamples(Q), pad)
    finish_report(rep, S.values, P.values, t_start)
    return P, rep


def equivalence_to_classic(S: GridSamples, cfg: FactorConfig | None = None) -> float:
    """Node-to-node spread of ``classic(z)^{-1} doubling(z)``; small means equal up to a constant unitary."""
    P_old, _ = classic_factorize(S, cfg)
    P_new, _ = doubling_factorize(S, cfg)
    dev, _ = constant_unitary_gap(P_old, P_new)
    return dev
