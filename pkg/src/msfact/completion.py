"""Paraunitary completion of ``F = [[I, 0], [zeta_1 ... zeta_{m-1}, f]]``.

Given anti-analytic blocks ``zeta_j`` of order ``N`` and an analytic block
``f`` (all ``M x M``), build a paraunitary ``U`` whose first ``m - 1`` block
rows are polynomials in ``z`` of degree ``N``, whose last block row is the
adjoint of such polynomials, with ``det U == 1`` and ``F U`` analytic.

Outline of the construction:

1. ``f`` is moved out of the way by splitting the formal series
   ``f^{-1} zeta_j`` into its negative-power part ``zeta_j^-`` and an
   analytic remainder; only ``zeta_j^-`` enters the linear system.
2. With ``gamma_{jn}`` the coefficient of ``z^-n`` in ``zeta_j^-`` and
   ``Gamma_j`` the block-Hankel matrix ``[gamma_{j, a+b}]``, every solution of
   the boundary conditions is determined by ``Y = X_m^H`` through
   ``(I + sum_j Gamma_j Gamma_j^H) Y = R`` with ``R`` either
   ``Gamma_i E`` or ``E = (I, 0, ..., 0)^T``; then
   ``X_j^{T_b} = Gamma_j^H Y - delta_ij E``; the first ``m - 1`` solutions
   are then negated so that ``zeta = 0`` gives ``U = I``.
3. The raw matrix has constant Gram matrix ``K = U~ U``; right-multiplying by
   ``K^{-1/2}`` makes it paraunitary, and a unimodular constant on the first
   block column sets the determinant to one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionError,
    FNearSingularError,
    KNotPDError,
    LemmaViolatedError,
    SolveFailedError,
)
from .laurent import LaurentMatrixPoly, grid_coefficients, max_abs, sample

TOL_PU = 1e-10
TOL_LEMMA = 1e-10
TOL_DET = 1e-10
TOL_ANALYTIC = 1e-9
SIGMA_FLOOR = 1e-12
EIG_FLOOR = 1e-14


def _next_pow2(n: int) -> int:
    return 1 << max(1, (int(n) - 1).bit_length())


def _ctrans(a):
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass(frozen=True, eq=False)
class CompletionInput:
    """``zetas`` hold coefficients of ``z^0, z^-1, ..., z^-N``; ``f`` of ``z^0..z^N``.

    Both are stored as plain arrays, ``zetas`` with shape ``(m-1, N+1, M, M)``
    and ``f`` with shape ``(N+1, M, M)``.
    """

    zetas: np.ndarray
    f: np.ndarray
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        z = np.asarray(self.zetas, dtype=complex)
        f = np.asarray(self.f, dtype=complex)
        if z.ndim == 3:
            z = z[None]
        if z.ndim != 4 or f.ndim != 3:
            raise DimensionError("zetas must be (m-1, N+1, M, M) and f (N+1, M, M)")
        if z.shape[0] < 1:
            raise DimensionError("at least one zeta block is required (m >= 2)")
        if z.shape[1:] != f.shape or f.shape[1] != f.shape[2]:
            raise DimensionError(f"shape mismatch: zetas {z.shape}, f {f.shape}")
        f0 = f[0]
        sv = np.linalg.svd(f0, compute_uv=False)
        if sv[-1] <= self.sigma_floor * max(sv[0], np.finfo(float).tiny):
            raise FNearSingularError(
                f"constant coefficient of f is numerically singular (sigma_min={sv[-1]:.3e})"
            )
        object.__setattr__(self, "zetas", z)
        object.__setattr__(self, "f", f)

    @classmethod
    def from_polys(cls, zetas, f: LaurentMatrixPoly, N: int | None = None, **kw):
        zetas = [z.trim() for z in zetas]
        f = f.trim()
        for z in zetas:
            if z.n_pos != 0:
                raise DimensionError("zeta blocks must be anti-analytic")
        if f.n_neg != 0:
            raise DimensionError("f must be analytic")
        if N is None:
            N = max([f.n_pos] + [z.n_neg for z in zetas])
        if f.n_pos > N or any(z.n_neg > N for z in zetas):
            raise DimensionError(f"inputs exceed the truncation order N={N}")
        M = f.r
        za = np.zeros((len(zetas), N + 1, M, M), dtype=complex)
        for j, z in enumerate(zetas):
            za[j, : z.n_neg + 1] = z.coeffs[::-1]
        fa = np.zeros((N + 1, M, M), dtype=complex)
        fa[: f.n_pos + 1] = f.coeffs
        return cls(za, fa, **kw)

    @property
    def M(self) -> int:
        return self.f.shape[1]

    @property
    def m(self) -> int:
        return self.zetas.shape[0] + 1

    @property
    def N(self) -> int:
        return self.f.shape[0] - 1

    def zeta_poly(self, j: int) -> LaurentMatrixPoly:
        return LaurentMatrixPoly(self.zetas[j][::-1], self.N)

    def f_poly(self) -> LaurentMatrixPoly:
        return LaurentMatrixPoly(self.f, 0)

    def F_poly(self) -> LaurentMatrixPoly:
        """The full ``mM x mM`` matrix function ``F``."""
        M, m, N = self.M, self.m, self.N
        c = np.zeros((2 * N + 1, m * M, m * M), dtype=complex)
        c[N] = np.eye(m * M)
        last = slice((m - 1) * M, m * M)
        c[N, last, last] = 0
        for j in range(m - 1):
            c[N::-1, last, j * M : (j + 1) * M] = self.zetas[j]
        c[N:, last, last] = self.f
        return LaurentMatrixPoly(c, N)


@dataclass(frozen=True, eq=False)
class SplitF:
    f: np.ndarray
    plus_parts: np.ndarray
    minus_parts: np.ndarray

    def minus_poly(self, j: int) -> LaurentMatrixPoly:
        N = self.minus_parts.shape[1] - 1
        return LaurentMatrixPoly(self.minus_parts[j][::-1], N)

    def plus_poly(self, j: int) -> LaurentMatrixPoly:
        return LaurentMatrixPoly(self.plus_parts[j], 0)


@dataclass(frozen=True, eq=False)
class HankelSystem:
    gammas: np.ndarray
    solve_matrix: np.ndarray
    rhs: np.ndarray

    @property
    def M(self) -> int:
        return self.gammas.shape[2]

    @property
    def m(self) -> int:
        return self.gammas.shape[0] + 1

    @property
    def N(self) -> int:
        return self.gammas.shape[1] - 1

    def gamma(self, j: int) -> np.ndarray:
        """Dense block-Hankel matrix ``Gamma_j``."""
        return hankel_matrix(self.gammas[j])


@dataclass(frozen=True, eq=False)
class ParaunitaryFactor:
    U: LaurentMatrixPoly
    M: int
    m: int
    det_constant: complex
    gram: np.ndarray
    paraunitary_residual: float | None = None
    det_deviation: float | None = None
    analytic_residual: float | None = None
    lemma_deviation: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.U.n_pos

    def block(self, i: int, j: int) -> LaurentMatrixPoly:
        M = self.M
        return LaurentMatrixPoly(
            self.U.coeffs[:, i * M : (i + 1) * M, j * M : (j + 1) * M], self.U.n_neg
        )


def hankel_matrix(gam: np.ndarray) -> np.ndarray:
    """``[gam[a + b]]`` for ``a, b = 0..N`` with zero blocks when ``a + b > N``."""
    L, M, _ = gam.shape
    out = np.zeros((L, M, L, M), dtype=complex)
    for a in range(L):
        out[a, :, : L - a, :] = gam[a:].transpose(1, 0, 2)
    return out.reshape(L * M, L * M)


def _polymul(a: np.ndarray, b: np.ndarray, keep: int) -> np.ndarray:
    P = _next_pow2(max(a.shape[0] + b.shape[0] - 1, keep))
    prod = np.fft.fft(a, P, axis=0) @ np.fft.fft(b, P, axis=0)
    return np.fft.ifft(prod, axis=0)[:keep]


def series_inverse(f: np.ndarray, terms: int) -> np.ndarray:
    """First ``terms`` coefficients of the formal power series ``f^{-1}``."""
    M = f.shape[1]
    g = np.linalg.inv(f[0])[None]
    k = 1
    while k < terms:
        k = min(2 * k, terms)
        t = -_polymul(f[:k], g, k)
        t[0] += 2 * np.eye(M)
        g = _polymul(g, t, k)
    return g[:terms]


def split_f(inp: CompletionInput) -> SplitF:
    """Split ``f^{-1} zeta_j`` into ``zeta_j^-`` (powers ``-N..-1``) and an analytic rest.

    ``f^{-1}`` is the formal power series inverse; only its first ``N``
    coefficients influence the negative powers.  The analytic remainder is
    returned truncated to powers ``0..N``.
    """
    N, M = inp.N, inp.M
    minus = np.zeros_like(inp.zetas)
    plus = np.zeros_like(inp.zetas)
    if N == 0:
        g0 = np.linalg.inv(inp.f[0])
        plus[:, 0] = g0 @ inp.zetas[:, 0]
        return SplitF(inp.f, plus, minus)
    finv = series_inverse(inp.f, 2 * N + 1)
    for j in range(inp.m - 1):
        rev = inp.zetas[j][::-1]
        full = _polymul(finv, rev, 2 * N + 1)
        # full[t] is the coefficient of z^(t - N)
        minus[j, 1:] = full[N - 1 :: -1]
        plus[j] = full[N:]
    return SplitF(inp.f, plus, minus)


def assemble_hankel(minus_parts: np.ndarray) -> HankelSystem:
    """Assemble ``I + sum_j Gamma_j Gamma_j^H`` and the ``m`` right-hand sides.

    ``Gamma_j Gamma_j^H`` has blocks ``sum_c gamma_{a+c} gamma_{b+c}^H``, so the
    sum is accumulated from the outer products ``gamma_a gamma_b^H`` by running
    sums along block diagonals instead of forming each ``Gamma_j``.
    """
    gam = np.asarray(minus_parts, dtype=complex)
    if gam.ndim == 3:
        gam = gam[None]
    k, L, M, _ = gam.shape
    D = L * M
    col = gam.transpose(1, 2, 0, 3).reshape(D, k * M)
    T = col @ _ctrans(col)
    T4 = T.reshape(L, M, L, M)
    for a in range(L - 2, -1, -1):
        T4[a, :, : L - 1, :] += T4[a + 1, :, 1:, :]
    T[np.diag_indices(D)] += 1.0
    E = np.zeros((D, M), dtype=complex)
    E[:M] = np.eye(M)
    rhs = np.concatenate([col, E], axis=1)
    return HankelSystem(gam, T, rhs)


def _gamma_h_times(gam: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``Gamma^H Y`` for block-Hankel ``Gamma`` built from ``gam``; ``Y`` is ``(L, M, c)``."""
    L, M, _ = gam.shape
    gh = np.conj(gam).transpose(0, 2, 1)
    out = np.empty((L, M, Y.shape[2]), dtype=complex)
    for a in range(L):
        n = L - a
        out[a] = gh[a:].transpose(1, 0, 2).reshape(M, n * M) @ Y[:n].reshape(n * M, -1)
    return out


def solve_solutions(sys: HankelSystem, overwrite: bool = False) -> np.ndarray:
    """All ``m`` solutions; ``out[l, k, n]`` is coefficient ``n`` of unknown ``x_{k+1}`` in solution ``l``."""
    M, m, N = sys.M, sys.m, sys.N
    L = N + 1
    A = sys.solve_matrix if overwrite else sys.solve_matrix.copy()
    try:
        cf = sla.cho_factor(A, lower=True, overwrite_a=True, check_finite=False)
        Y = sla.cho_solve(cf, sys.rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolveFailedError(f"Cholesky of the Hankel system failed: {exc}") from exc
    if not np.all(np.isfinite(Y)):
        raise SolveFailedError("non-finite solution of the Hankel system")
    # negating the first m-1 solutions keeps every constraint and makes
    # zero input produce the identity
    Y[:, : (m - 1) * M] *= -1
    Y3 = Y.reshape(L, M, m * M)
    out = np.empty((m, m, L, M, M), dtype=complex)
    for k in range(m - 1):
        X = _gamma_h_times(sys.gammas[k], Y3)
        X[0, :, k * M : (k + 1) * M] += np.eye(M)
        out[:, k] = X.reshape(L, M, m, M).transpose(2, 0, 1, 3)
    out[:, m - 1] = _ctrans(Y3.reshape(L, M, m, M).transpose(2, 0, 1, 3))
    return out


def raw_matrix(solutions: np.ndarray) -> LaurentMatrixPoly:
    """Arrange solutions as block columns; the last block row holds adjoints."""
    m, _, L, M, _ = solutions.shape
    N = L - 1
    c = np.zeros((2 * N + 1, m * M, m * M), dtype=complex)
    for l in range(m):
        cols = slice(l * M, (l + 1) * M)
        for k in range(m - 1):
            c[N:, k * M : (k + 1) * M, cols] = solutions[l, k]
        c[N::-1, (m - 1) * M :, cols] = _ctrans(solutions[l, m - 1])
    return LaurentMatrixPoly(c, N)


def gram_constant(U: LaurentMatrixPoly) -> np.ndarray:
    """Constant coefficient of ``U~ U``, i.e. ``sum_n C_n^H C_n``."""
    c = U.coeffs
    return np.einsum("nba,nbc->ac", np.conj(c), c)


def lemma_deviation(U: LaurentMatrixPoly, n_grid: int | None = None) -> float:
    """Relative node-to-node spread of ``U~(z) U(z)`` on a grid."""
    if n_grid is None:
        n_grid = _next_pow2(2 * U.band + 2)
    g = sample(U, n_grid)
    K = _ctrans(g) @ g
    Kbar = K.mean(axis=0)
    return max_abs(K - Kbar) / max(max_abs(Kbar), np.finfo(float).tiny)


def normalize(U_raw: LaurentMatrixPoly, M: int, eig_floor: float = EIG_FLOOR,
              check_lemma: bool = False, tol_lemma: float = TOL_LEMMA) -> ParaunitaryFactor:
    """Right-multiply by ``K^{-1/2}`` and a unimodular first-column scale so ``det U = 1``."""
    dev = None
    if check_lemma:
        dev = lemma_deviation(U_raw)
        if dev > tol_lemma:
            raise LemmaViolatedError(f"U~U varies across the circle (relative spread {dev:.3e})")
    K = gram_constant(U_raw)
    K = 0.5 * (K + K.conj().T)
    w, V = np.linalg.eigh(K)
    if w[0] <= eig_floor * max(w[-1], 1.0):
        raise KNotPDError(f"Gram matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    Kinvh = (V / np.sqrt(w)) @ V.conj().T
    c = U_raw.coeffs @ Kinvh
    sign, _ = np.linalg.slogdet(c.sum(axis=0))
    c[:, :, :M] *= np.conj(sign) ** (1.0 / M)
    U = LaurentMatrixPoly(c, U_raw.n_neg)
    det = complex(np.linalg.det(c.sum(axis=0)))
    return ParaunitaryFactor(U, M, c.shape[1] // M, det, K, lemma_deviation=dev)


def validate_factor(inp: CompletionInput, pf: ParaunitaryFactor) -> dict:
    """Residuals of the three post-conditions measured on a ``>= 4(N+1)`` grid."""
    n_grid = _next_pow2(4 * (inp.N + 1))
    Ug = sample(pf.U, n_grid)
    eye = np.eye(Ug.shape[1])
    pu = max_abs(Ug @ _ctrans(Ug) - eye)
    det = np.linalg.det(Ug)
    Fp = inp.F_poly()
    FU = sample(Fp, n_grid) @ Ug
    coef = grid_coefficients(FU)
    neg = coef[n_grid // 2 :]
    scale = max(max_abs(Fp.coeffs), 1.0)
    return {
        "paraunitary_residual": pu,
        "det_deviation": float(np.abs(det - 1.0).max()),
        "analytic_residual": max_abs(neg) / scale,
    }


def complete(inp: CompletionInput, *, validate: bool = True, tol_pu: float = TOL_PU,
             tol_det: float = TOL_DET, tol_analytic: float = TOL_ANALYTIC,
             tol_lemma: float = TOL_LEMMA, eig_floor: float = EIG_FLOOR) -> ParaunitaryFactor:
    """Paraunitary ``U`` with ``det U = 1`` making ``F U`` analytic.

    With ``validate`` the post-conditions are measured and a violation raises
    :class:`LemmaViolatedError`, :class:`SolveFailedError` or ``ValueError``.
    """
    parts = split_f(inp)
    sys = assemble_hankel(parts.minus_parts)
    sols = solve_solutions(sys, overwrite=True)
    U_raw = raw_matrix(sols)
    pf = normalize(U_raw, inp.M, eig_floor=eig_floor, check_lemma=validate, tol_lemma=tol_lemma)
    if not validate:
        return pf
    res = validate_factor(inp, pf)
    pf = ParaunitaryFactor(pf.U, pf.M, pf.m, pf.det_constant, pf.gram,
                           res["paraunitary_residual"], res["det_deviation"],
                           res["analytic_residual"], pf.lemma_deviation)
    if res["paraunitary_residual"] > tol_pu or res["det_deviation"] > tol_det:
        raise SolveFailedError(
            f"completion is not paraunitary with unit determinant "
            f"(pu={res['paraunitary_residual']:.3e}, det={res['det_deviation']:.3e})"
        )
    if res["analytic_residual"] > tol_analytic:
        raise SolveFailedError(f"F U is not analytic (residual {res['analytic_residual']:.3e})")
    return pf
