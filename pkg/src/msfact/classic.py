"""Row-by-row driver: make leading ``m x m`` submatrices analytic for m = 2..r."""
from __future__ import annotations

import time
from dataclasses import asdict

import numpy as np

from .completion import CompletionInput, complete
from .errors import MSFError, StageFailedError
from .laurent import GridSamples, grid_coefficients, sample
from .metrics import metric_c1, metric_c2
from .report import FactorConfig, FactorReport
from .seed import seed


def tail_order(coeffs: np.ndarray, eps_tail: float = 1e-14) -> int:
    """Smallest ``N <= N_g/2`` beyond which negative-power coefficients are negligible.

    ``coeffs`` is a transform-ordered array over axis 0 (any trailing shape).
    Coefficients of ``z^-n`` with ``n > N`` must all be below ``eps_tail`` times
    the largest coefficient magnitude.
    """
    c = np.abs(np.asarray(coeffs))
    ng = c.shape[0]
    half = ng // 2
    flat = c.reshape(ng, -1)
    top = flat.max() if flat.size else 0.0
    if top == 0.0:
        return 0
    # neg[k - 1] = max |c_{-k}| for k = 1..N_g/2
    neg = flat[half:][::-1].max(axis=1)
    big = np.flatnonzero(neg >= eps_tail * top)
    return int(big[-1] + 1) if big.size else 0


def choose_order(coeffs: np.ndarray, cfg: FactorConfig) -> int:
    N = tail_order(coeffs, cfg.eps_tail)
    if cfg.n_max is not None:
        N = min(N, cfg.n_max)
    return N


def negative_part(coeffs: np.ndarray, N: int) -> np.ndarray:
    """``out[n]`` = coefficient of ``z^-n`` for ``n = 0..N`` (``out[0]`` is zero)."""
    ng = coeffs.shape[0]
    out = np.zeros((N + 1,) + coeffs.shape[1:], dtype=complex)
    if N:
        out[1:] = coeffs[ng - 1 : ng - N - 1 : -1]
    return out


def analytic_residual(values: np.ndarray) -> float:
    """Largest coefficient at the negative-power indices ``N_g/2+1 .. N_g-1``."""
    ng = values.shape[0]
    tail = grid_coefficients(values)[ng // 2 + 1 :]
    return float(np.abs(tail).max()) if tail.size else 0.0


def nearest_unitary(U: np.ndarray, steps: int = 2) -> np.ndarray:
    """Polar factor of every node matrix, i.e. the closest unitary in Frobenius norm.

    Newton-Schulz iteration ``U <- U (3I - U^H U) / 2``; it converges
    quadratically from matrices that are already nearly unitary, which is
    the only case it is used for.  Far from unitary it falls back to an SVD.
    """
    eye = np.eye(U.shape[-1])
    G = np.conj(np.swapaxes(U, -1, -2)) @ U - eye
    if np.abs(G).max() > 1e-3:
        W, _, Vh = np.linalg.svd(U)
        return W @ Vh
    for _ in range(steps):
        U = U @ (eye - 0.5 * G)
        G = np.conj(np.swapaxes(U, -1, -2)) @ U - eye
    return U


def apply_completion(zetas, f, n_grid, cfg: FactorConfig):
    """Run the completion and return ``(factor, U on the working grid)``.

    The grid samples are snapped to the nearest unitary at each node.  The
    correction is of the order of the rounding in the solve, but without it
    the departure from unitarity accumulates linearly over the stages.
    """
    pf = complete(CompletionInput(zetas, f), validate=cfg.validate,
                  tol_pu=cfg.tol_paraunitary, tol_det=cfg.tol_paraunitary,
                  tol_analytic=cfg.tol_analytic)
    Ug = sample(pf.U, n_grid)
    if cfg.unitary_snap:
        Ug = nearest_unitary(Ug)
    return pf, Ug


def finish_report(rep: FactorReport, S: np.ndarray, P: np.ndarray, t_start: float):
    rep.C1 = metric_c1(S, P)
    rep.C2 = metric_c2(P)
    rep.timings["total"] = time.perf_counter() - t_start


def classic_factorize(S: GridSamples, cfg: FactorConfig | None = None):
    """Spectral factor of ``S`` by the classic row-by-row recursion.

    Returns ``(S_plus, report)`` with ``S_plus`` sampled on the grid of ``S``.
    """
    cfg = cfg or FactorConfig()
    t_start = time.perf_counter()
    ng, r = S.n_grid, S.r
    rep = FactorReport("classic", r, ng, config=asdict(cfg))
    history = [] if cfg.keep_history else None

    t = time.perf_counter()
    Q = seed(S).Q.values.copy()
    rep.timings["seed"] = time.perf_counter() - t
    reference = metric_c1(S.values, Q) if cfg.debug else None

    t = time.perf_counter()
    for m in range(2, r + 1):
        row = m - 1
        try:
            c = grid_coefficients(Q[:, row, :m])
            N = choose_order(c[:, : m - 1], cfg)
            zetas = negative_part(c[:, : m - 1], N).T[:, :, None, None]
            f = c[: N + 1, m - 1][:, None, None]
            pf, Ug = apply_completion(zetas, f, ng, cfg)
            Q[:, :, :m] = Q[:, :, :m] @ Ug
        except MSFError as exc:
            rep.failure = {"stage": m, "error": str(exc)}
            raise StageFailedError(m, exc) from exc
        rep.orders.append(N)
        if cfg.diagnostics:
            eye = np.eye(m)
            rep.paraunitary_residuals.append(
                float(np.abs(Ug @ np.conj(np.swapaxes(Ug, 1, 2)) - eye).max()))
        if history is not None:
            history.append({"stage": m, "N": N, "U": pf.U})
        if cfg.debug:
            rep.checks.append(_check_stage(S.values, Q, m, reference))
    rep.timings["stages"] = time.perf_counter() - t

    rep.history = history
    finish_report(rep, S.values, Q, t_start)
    return GridSamples(Q), rep


def _check_stage(S, Q, m, reference):
    """Stage invariants; hard ones raise, the analytic residual is recorded."""
    if m < Q.shape[1] and np.any(Q[:, :m, m:] != 0):
        raise AssertionError(f"stage {m}: upper-right entries are not exactly zero")
    c1 = metric_c1(S, Q)
    if c1 > 10 * reference + 1e-12 * max(np.abs(S).max(), 1.0):
        raise AssertionError(f"stage {m}: QQ^H drifted from S ({c1:.3e})")
    return {"stage": m, "leading_analytic_residual": analytic_residual(Q[:, :m, :m]), "C1": c1}
