"""Outer (minimum-phase) factor of a positive scalar density on the circle.

The factor is ``exp`` of the analytic half of ``log s``, computed with one
forward and one inverse transform on the sampling grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSampleError, OverflowInExpError
from .laurent import grid_coefficients, grid_values

PALEY_WIENER_FLOOR = -30.0
_LOG_MAX = 700.0


@dataclass(frozen=True, eq=False)
class ScalarFactor:
    samples: np.ndarray
    coeffs: np.ndarray

    @property
    def value_at_zero(self) -> complex:
        return complex(self.coeffs[0])


def _check_samples(s) -> np.ndarray:
    s = np.asarray(s)
    if np.iscomplexobj(s):
        if np.abs(s.imag).max(initial=0.0) > 0:
            raise ValueError("scalar density must be real")
        s = s.real
    s = s.astype(float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("scalar density needs a 1-d array of at least two samples")
    bad = np.flatnonzero(~np.isfinite(s) | (s <= 0))
    if bad.size:
        raise NonPositiveSampleError(int(bad[0]), float(s[bad[0]]))
    return s


def paley_wiener_check(s) -> float:
    """Grid mean of ``log s``; values below ``PALEY_WIENER_FLOOR`` signal failure."""
    s = _check_samples(s)
    return float(np.mean(np.log(s)))


def log_analytic_part(log_s: np.ndarray) -> np.ndarray:
    """Transform-ordered coefficients ``h`` with ``2 Re h(z_j) = log_s[j]``."""
    ng = log_s.shape[0]
    c = grid_coefficients(log_s.astype(complex))
    c[0] *= 0.5
    c[ng // 2] *= 0.5
    c[ng // 2 + 1 :] = 0.0
    return c


def scalar_factorize(s) -> ScalarFactor:
    """Outer factor ``s+`` with ``|s+(z_j)|^2 = s(z_j)`` and ``s+(0) > 0``.

    The Nyquist coefficient of ``log s`` is split evenly so that the modulus
    is reproduced exactly on the grid.
    """
    s = _check_samples(s)
    h = log_analytic_part(np.log(s))
    logs = grid_values(h)
    if logs.real.max() > _LOG_MAX:
        raise OverflowInExpError(
            f"log-modulus of the factor reaches {logs.real.max():.1f}; dynamic range too large"
        )
    samples = np.exp(logs)
    coeffs = grid_coefficients(samples)[: s.size // 2]
    return ScalarFactor(samples, coeffs)
