"""Accuracy measures for a computed spectral factor."""
from __future__ import annotations

import numpy as np

from .errors import DetVanishesError, DimensionError
from .laurent import GridSamples, grid_coefficients


def _values(x):
    return x.values if isinstance(x, GridSamples) else np.asarray(x)


def metric_c1(S, S_plus) -> float:
    """``max_j |S(z_j) - S+(z_j) S+(z_j)^H|_inf``."""
    S, P = _values(S), _values(S_plus)
    if S.shape != P.shape:
        raise DimensionError(f"shape mismatch: {S.shape} vs {P.shape}")
    return float(np.abs(S - P @ np.conj(np.swapaxes(P, 1, 2))).max())


def metric_c2(S_plus) -> float:
    """Largest coefficient of ``S+`` at transform indices ``N_g/2+1 .. N_g-1``."""
    P = _values(S_plus)
    ng = P.shape[0]
    if ng % 2:
        raise DimensionError("grid size must be even")
    tail = grid_coefficients(P)[ng // 2 + 1 :]
    return float(np.abs(tail).max()) if tail.size else 0.0


def outer_check(S_plus) -> float:
    """Gap between ``log|det S+(0)|`` and the grid mean of ``log|det S+(z_j)|``.

    ``S+(0)`` is the constant coefficient of the grid transform.  Zero for an
    outer factor; a factor with an inner part has a strictly positive gap.
    """
    P = _values(S_plus)
    sign, logdet = np.linalg.slogdet(P)
    dead = np.flatnonzero(sign == 0)
    if dead.size:
        raise DetVanishesError(int(dead[0]))
    C0 = grid_coefficients(P)[0]
    # a constant coefficient at transform-noise level means S+(0) is singular
    if np.linalg.svd(C0, compute_uv=False)[-1] <= 1e-12 * max(np.abs(P).max(), 1e-300):
        raise DetVanishesError(None)
    _, l0 = np.linalg.slogdet(C0)
    return float(abs(np.mean(logdet) - l0))


def constant_unitary_gap(P1, P2):
    """How far ``P1^{-1} P2`` is from one constant unitary matrix.

    Returns ``(deviation, unitarity)``: the largest node-to-node deviation of
    ``W(z_j) = P1(z_j)^{-1} P2(z_j)`` from ``W(z_0)``, and
    ``|W(z_0) W(z_0)^H - I|_inf``.
    """
    A, B = _values(P1), _values(P2)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    W = np.linalg.solve(A, B)
    dev = float(np.abs(W - W[0]).max())
    unit = float(np.abs(W[0] @ W[0].conj().T - np.eye(W.shape[1])).max())
    return dev, unit


def gauge_lower_triangular(S_plus) -> np.ndarray:
    """Constant unitary ``V`` with ``C_0{S+ V}`` lower triangular, positive diagonal."""
    P = _values(S_plus)
    C0 = grid_coefficients(P)[0]
    # C0 = R^H Q^H from C0^H = Q R, so C0 Q = R^H is lower triangular
    Q, R = np.linalg.qr(C0.conj().T)
    d = np.diagonal(R).copy()
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return Q * phase[None, :]


def apply_gauge(S_plus) -> GridSamples:
    P = _values(S_plus)
    return GridSamples(P @ gauge_lower_triangular(P))
