"""Pointwise lower-triangular factor of S with outer scalar factors on the diagonal."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitianError, NotPositiveDefiniteError, PaleyWienerError
from .laurent import GridSamples
from .scalar import PALEY_WIENER_FLOOR, ScalarFactor, paley_wiener_check, scalar_factorize

HERMITIAN_TOL = 1e-10
PIVOT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TriangularSeed:
    Q: GridSamples
    diag_factors: tuple


def hermitian_residual(values: np.ndarray) -> np.ndarray:
    """Per-node ``max |S - S^H|`` relative to the global entry scale."""
    scale = max(np.abs(values).max(), np.finfo(float).tiny)
    diff = values - np.conj(np.swapaxes(values, 1, 2))
    return np.abs(diff).reshape(values.shape[0], -1).max(axis=1) / scale


def _cholesky(values: np.ndarray, pivot_floor: float) -> np.ndarray:
    try:
        L = np.linalg.cholesky(values)
    except np.linalg.LinAlgError:
        for j, Sj in enumerate(values):
            try:
                np.linalg.cholesky(Sj)
            except np.linalg.LinAlgError:
                raise NotPositiveDefiniteError(j, float(np.linalg.eigvalsh(Sj).min())) from None
        raise
    r = values.shape[1]
    trace_scale = np.abs(np.trace(values, axis1=1, axis2=2)).max() / r
    piv = np.diagonal(L, axis1=1, axis2=2).real
    bad = np.argwhere(piv <= pivot_floor * np.sqrt(trace_scale))
    if bad.size:
        j, i = bad[0]
        raise NotPositiveDefiniteError(int(j), float(piv[j, i]))
    return L


def seed(S: GridSamples, *, hermitian_tol: float = HERMITIAN_TOL,
         pivot_floor: float = PIVOT_FLOOR,
         pw_floor: float = PALEY_WIENER_FLOOR) -> TriangularSeed:
    """Lower-triangular ``Q`` with ``Q Q^H = S`` nodewise and outer diagonal entries.

    Column ``m`` of the pointwise Cholesky factor is rotated by the unimodular
    function ``d_m+ / M_mm`` where ``d_m+`` is the outer factor of ``M_mm^2``.
    """
    values = S.values
    res = hermitian_residual(values)
    j = int(np.argmax(res))
    if res[j] > hermitian_tol:
        raise NotHermitianError(j, float(res[j]))
    herm = 0.5 * (values + np.conj(np.swapaxes(values, 1, 2)))
    L = _cholesky(herm, pivot_floor)
    factors = []
    for m in range(S.r):
        d = L[:, m, m].real
        d2 = d * d
        pw = paley_wiener_check(d2)
        if pw < pw_floor:
            raise PaleyWienerError(m, pw)
        fac: ScalarFactor = scalar_factorize(d2)
        L[:, m:, m] *= (fac.samples / d)[:, None]
        L[:, m, m] = fac.samples
        factors.append(fac)
    return TriangularSeed(GridSamples(L), tuple(factors))
