"""Laurent matrix polynomials on the unit circle and their grid samples.

A :class:`LaurentMatrixPoly` stores the coefficients ``A_n`` of
``P(z) = sum_{n=-n_neg}^{n_pos} A_n z^n`` coefficient-major, row-major within
each matrix.  A :class:`GridSamples` holds ``F(z_j)`` on the uniform grid
``z_j = exp(2 pi i j / N_g)``.

Transform convention: coefficient index ``k`` of a length-``N_g`` transform
holds the power ``z^k`` for ``0 <= k < N_g/2`` and the power ``z^(k - N_g)`` in
the upper half, so negative powers live at the top of the index range.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "LaurentMatrixPoly",
    "GridSamples",
    "is_power_of_two",
    "adjoint",
    "block_transpose",
    "block_hermitian",
    "to_grid",
    "from_grid",
    "grid_values",
    "grid_coefficients",
    "sample",
    "project_plus",
    "project_minus",
    "multiply",
    "max_abs",
    "is_paraunitary",
]


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class LaurentMatrixPoly:
    """Finite Laurent series with square complex matrix coefficients."""

    coeffs: np.ndarray
    n_neg: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise DimensionError(f"coefficients must have shape (K, r, r), got {c.shape}")
        if c.shape[0] < 1:
            raise DimensionError("a Laurent polynomial needs at least one coefficient slot")
        if self.n_neg < 0 or self.n_neg >= c.shape[0]:
            raise DimensionError(f"n_neg={self.n_neg} incompatible with {c.shape[0]} slots")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n_neg", int(self.n_neg))

    @classmethod
    def constant(cls, A) -> "LaurentMatrixPoly":
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        return cls(A[None], 0)

    @classmethod
    def identity(cls, r: int) -> "LaurentMatrixPoly":
        return cls.constant(np.eye(r))

    @classmethod
    def from_powers(cls, terms: dict, r: int | None = None) -> "LaurentMatrixPoly":
        """Build from ``{power: matrix}``; missing powers in the band are zero."""
        if not terms:
            raise DimensionError("no terms given")
        mats = {int(k): np.atleast_2d(np.asarray(v, dtype=complex)) for k, v in terms.items()}
        if r is None:
            r = next(iter(mats.values())).shape[0]
        lo = min(0, min(mats))
        hi = max(0, max(mats))
        c = np.zeros((hi - lo + 1, r, r), dtype=complex)
        for k, v in mats.items():
            c[k - lo] = v
        return cls(c, -lo)

    @property
    def r(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_pos(self) -> int:
        return self.coeffs.shape[0] - self.n_neg - 1

    @property
    def band(self) -> int:
        return self.coeffs.shape[0]

    def coeff(self, n: int) -> np.ndarray:
        """Coefficient of ``z^n`` (zero outside the stored band)."""
        if -self.n_neg <= n <= self.n_pos:
            return self.coeffs[n + self.n_neg]
        return np.zeros((self.r, self.r), dtype=complex)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        powers = np.arange(-self.n_neg, self.n_pos + 1)
        zp = z[..., None] ** powers
        return np.tensordot(zp, self.coeffs, axes=([-1], [0]))

    def is_analytic(self, tol: float = 0.0) -> bool:
        return self.n_neg == 0 or max_abs(self.coeffs[: self.n_neg]) <= tol

    def is_antianalytic(self, tol: float = 0.0) -> bool:
        return self.n_pos == 0 or max_abs(self.coeffs[self.n_neg + 1 :]) <= tol

    def is_constant(self, tol: float = 0.0) -> bool:
        return self.is_analytic(tol) and self.is_antianalytic(tol)

    def widen(self, n_neg: int, n_pos: int) -> "LaurentMatrixPoly":
        """Same polynomial stored on a band at least ``[-n_neg, n_pos]``."""
        n_neg = max(n_neg, self.n_neg)
        n_pos = max(n_pos, self.n_pos)
        c = np.zeros((n_neg + n_pos + 1, self.r, self.r), dtype=complex)
        c[n_neg - self.n_neg : n_neg - self.n_neg + self.band] = self.coeffs
        return LaurentMatrixPoly(c, n_neg)

    def trim(self, tol: float = 0.0) -> "LaurentMatrixPoly":
        """Drop outer coefficients whose entries are all at most ``tol``."""
        mags = np.abs(self.coeffs).reshape(self.band, -1).max(axis=1)
        lo, hi = 0, self.band - 1
        while lo < self.n_neg and mags[lo] <= tol:
            lo += 1
        while hi > self.n_neg and mags[hi] <= tol:
            hi -= 1
        return LaurentMatrixPoly(self.coeffs[lo : hi + 1], self.n_neg - lo)

    def __add__(self, other: "LaurentMatrixPoly") -> "LaurentMatrixPoly":
        _check_same_r(self, other)
        a = self.widen(other.n_neg, other.n_pos)
        b = other.widen(self.n_neg, self.n_pos)
        return LaurentMatrixPoly(a.coeffs + b.coeffs, a.n_neg)

    def __sub__(self, other: "LaurentMatrixPoly") -> "LaurentMatrixPoly":
        return self + LaurentMatrixPoly(-other.coeffs, other.n_neg)

    def __matmul__(self, other: "LaurentMatrixPoly") -> "LaurentMatrixPoly":
        return multiply(self, other)

    def allclose(self, other: "LaurentMatrixPoly", atol: float = 1e-12) -> bool:
        return max_abs((self - other).coeffs) <= atol

    def __repr__(self):
        return f"LaurentMatrixPoly(r={self.r}, n_neg={self.n_neg}, n_pos={self.n_pos})"


@dataclass(frozen=True, eq=False)
class GridSamples:
    """Values ``F(z_j)`` of an ``r x r`` matrix function on the ``N_g``-point grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None, None]
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise DimensionError(f"grid values must have shape (N_g, r, r), got {v.shape}")
        if v.shape[0] < 2 or not is_power_of_two(v.shape[0]):
            raise DimensionError(f"grid size must be a power of two >= 2, got {v.shape[0]}")
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> int:
        return self.values.shape[1]

    @property
    def n_grid(self) -> int:
        return self.values.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.n_grid) / self.n_grid)

    def coefficients(self) -> np.ndarray:
        """Full length-``N_g`` coefficient array in transform order."""
        return grid_coefficients(self.values)


def _check_same_r(p, q):
    if p.r != q.r:
        raise DimensionError(f"dimension mismatch: {p.r} vs {q.r}")


def grid_values(coeffs: np.ndarray) -> np.ndarray:
    """Samples on the grid from a transform-ordered coefficient array (axis 0)."""
    return np.fft.ifft(coeffs, axis=0) * coeffs.shape[0]


def grid_coefficients(values: np.ndarray) -> np.ndarray:
    """Transform-ordered coefficients from grid samples (axis 0)."""
    return np.fft.fft(values, axis=0) / values.shape[0]


def adjoint(p: LaurentMatrixPoly) -> LaurentMatrixPoly:
    """``P~(z) = sum A_n^H z^-n``; equals ``P(z)^H`` on the unit circle."""
    c = np.conj(np.swapaxes(p.coeffs[::-1], 1, 2))
    return LaurentMatrixPoly(c, p.n_pos)


def _block_split(A: np.ndarray, block: int):
    A = np.asarray(A)
    if A.ndim != 2 or block < 1 or A.shape[0] % block or A.shape[1] % block:
        raise DimensionError(f"shape {A.shape} is not divisible into {block}x{block} blocks")
    p, q = A.shape[0] // block, A.shape[1] // block
    return A.reshape(p, block, q, block), p, q


def block_transpose(A: np.ndarray, block: int) -> np.ndarray:
    """Swap block (i, j) with block (j, i); blocks themselves are not transposed."""
    B, p, q = _block_split(A, block)
    return B.transpose(2, 1, 0, 3).reshape(q * block, p * block)


def block_hermitian(A: np.ndarray, block: int) -> np.ndarray:
    """Block transpose with entrywise conjugation."""
    return np.conj(block_transpose(A, block))


def to_grid(p: LaurentMatrixPoly, n_grid: int) -> GridSamples:
    if not is_power_of_two(n_grid) or n_grid < 2:
        raise DimensionError(f"grid size must be a power of two >= 2, got {n_grid}")
    if n_grid < p.band:
        raise DimensionError(f"grid of {n_grid} points cannot hold band of {p.band} coefficients")
    c = np.zeros((n_grid, p.r, p.r), dtype=complex)
    c[: p.n_pos + 1] = p.coeffs[p.n_neg :]
    if p.n_neg:
        c[n_grid - p.n_neg :] = p.coeffs[: p.n_neg]
    return GridSamples(grid_values(c))


def sample(p: LaurentMatrixPoly, n_grid: int) -> np.ndarray:
    """Grid values of ``p`` as a bare array, folding powers modulo ``n_grid``.

    Unlike :func:`to_grid` this accepts bands wider than the grid; entries
    whose supports collide are simply added, which is exact when each matrix
    entry's own band fits.
    """
    buf = np.zeros((n_grid, p.r, p.r), dtype=complex)
    powers = np.arange(-p.n_neg, p.n_pos + 1) % n_grid
    np.add.at(buf, powers, p.coeffs)
    return grid_values(buf)


def from_grid(s: GridSamples, n_neg: int, n_pos: int) -> LaurentMatrixPoly:
    """Read the band ``[-n_neg, n_pos]`` out of the grid transform."""
    ng = s.n_grid
    if n_neg < 0 or n_pos < 0 or n_neg + n_pos + 1 > ng:
        raise DimensionError(f"band [-{n_neg}, {n_pos}] does not fit a grid of {ng} points")
    c = grid_coefficients(s.values)
    out = np.empty((n_neg + n_pos + 1, s.r, s.r), dtype=complex)
    out[n_neg:] = c[: n_pos + 1]
    if n_neg:
        out[:n_neg] = c[ng - n_neg :]
    return LaurentMatrixPoly(out, n_neg)


def project_plus(p: LaurentMatrixPoly) -> LaurentMatrixPoly:
    return LaurentMatrixPoly(p.coeffs[p.n_neg :].copy(), 0)


def project_minus(p: LaurentMatrixPoly) -> LaurentMatrixPoly:
    return LaurentMatrixPoly(p.coeffs[: p.n_neg + 1].copy(), p.n_neg)


def multiply(p: LaurentMatrixPoly, q: LaurentMatrixPoly) -> LaurentMatrixPoly:
    """Matrix product ``p(z) q(z)`` computed by pointwise products on a grid."""
    _check_same_r(p, q)
    band = p.band + q.band - 1
    ng = 1 << max(1, (band - 1).bit_length())
    prod = to_grid(p, ng).values @ to_grid(q, ng).values
    return from_grid(GridSamples(prod), p.n_neg + q.n_neg, p.n_pos + q.n_pos)


def max_abs(A) -> float:
    A = np.asarray(A)
    return float(np.abs(A).max()) if A.size else 0.0


def is_paraunitary(u: LaurentMatrixPoly, tol: float = 1e-10, n_grid: int | None = None):
    """Return ``(ok, residual)`` with ``residual = max_j |U(z_j) U(z_j)^H - I|``."""
    if n_grid is None:
        n_grid = 1 << max(3, (2 * u.band).bit_length())
    g = to_grid(u, n_grid).values
    res = max_abs(g @ np.conj(np.swapaxes(g, 1, 2)) - np.eye(u.r))
    return res <= tol, res
