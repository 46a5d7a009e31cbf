import json

import numpy as np
import pytest

from msfact.bench import (
    GeneratorConfig,
    benchmark,
    checksum,
    density_from_polynomial,
    draw_coefficients,
    generate_density,
)
from msfact.errors import DetVanishesError, DimensionError
from msfact.laurent import GridSamples
from msfact.metrics import (
    apply_gauge,
    constant_unitary_gap,
    gauge_lower_triangular,
    metric_c1,
    metric_c2,
    outer_check,
)
from msfact.report import FactorConfig, FactorReport

# frozen at first build: generate_density(GeneratorConfig(4, 2, 16, seed=42))
GOLDEN_SHA256 = "0747119e33bf1aaa3512503add6216237248a4c3d06aaf066df1f177f9064e8d"
GOLDEN_SAMPLE = -3.1774244710124013 + 0.3232783201470104j


def const(A, ng=16):
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    return GridSamples(np.broadcast_to(A, (ng,) + A.shape).copy())


class TestGenerator:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            GeneratorConfig(0, 1, 16)
        with pytest.raises(ValueError):
            GeneratorConfig(2, 1, 12)
        with pytest.raises(ValueError):
            GeneratorConfig(2, 8, 16)
        with pytest.raises(ValueError):
            GeneratorConfig(2, 1, 16, low=1, high=1)

    def test_identity_hook(self):
        S = density_from_polynomial(np.eye(3), 8)
        assert np.abs(S.values - np.eye(3)).max() < 1e-15

    def test_hermitian(self):
        S = generate_density(GeneratorConfig(6, 3, 32, seed=1))
        assert np.abs(S.values - np.conj(np.swapaxes(S.values, 1, 2))).max() < 1e-13

    def test_golden(self):
        S = generate_density(GeneratorConfig(4, 2, 16, seed=42))
        assert checksum(S) == GOLDEN_SHA256
        assert S.values[3, 1, 2] == GOLDEN_SAMPLE

    def test_reproducible_and_seed_sensitive(self):
        a = generate_density(GeneratorConfig(3, 2, 16, seed=5)).values
        b = generate_density(GeneratorConfig(3, 2, 16, seed=5)).values
        c = generate_density(GeneratorConfig(3, 2, 16, seed=6)).values
        assert a.tobytes() == b.tobytes() and a.tobytes() != c.tobytes()

    def test_real_and_bounds(self):
        A = draw_coefficients(GeneratorConfig(3, 2, 16, seed=0, real=True, low=0.5, high=2.0))
        assert not A.imag.any() and A.real.min() >= 0.5 and A.real.max() <= 2.0
        B = draw_coefficients(GeneratorConfig(3, 2, 16, seed=0))
        assert np.abs(B.imag).max() > 0 and np.abs(B.real).max() <= 1

    def test_samples_match_definition(self):
        cfg = GeneratorConfig(2, 2, 8, seed=3)
        A = draw_coefficients(cfg)
        z = np.exp(2j * np.pi * 5 / 8)
        P = sum(A[k] * z ** k for k in range(3))
        assert np.abs(generate_density(cfg).values[5] - P @ P.conj().T).max() < 1e-13


class TestC1:
    def test_trivial(self):
        assert metric_c1(const(np.eye(2)), const(np.eye(2))) == 0
        assert metric_c1(const(2 * np.eye(2)), const(np.eye(2))) == 1

    def test_brute_force(self):
        rng = np.random.default_rng(0)
        S = rng.standard_normal((8, 3, 3)) + 1j * rng.standard_normal((8, 3, 3))
        P = rng.standard_normal((8, 3, 3)) + 1j * rng.standard_normal((8, 3, 3))
        worst = 0.0
        for j in range(8):
            D = S[j] - P[j] @ P[j].conj().T
            for a in range(3):
                for b in range(3):
                    worst = max(worst, abs(D[a, b]))
        assert metric_c1(S, P) == pytest.approx(worst, rel=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            metric_c1(const(np.eye(2)), const(np.eye(3)))

    def test_invariances(self):
        from msfact import classic_factorize

        rng = np.random.default_rng(1)
        B = 0.2 * rng.standard_normal((1, 3, 3))
        S = density_from_polynomial(np.concatenate([np.eye(3)[None], B]), 64)
        P, _ = classic_factorize(S)
        V, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        assert metric_c1(S, P.values @ V) == pytest.approx(metric_c1(S, P), abs=1e-14)
        # entrywise maxima are only unitarily invariant when the factor is analytic to rounding
        assert metric_c2(P) < 1e-14
        assert abs(metric_c2(P.values @ V) - metric_c2(P)) < 1e-12
        perm = rng.permutation(64)
        assert metric_c1(S.values[perm], P.values[perm]) == metric_c1(S, P)

    def test_c2_rotation_bound(self):
        from msfact import classic_factorize

        S = generate_density(GeneratorConfig(3, 2, 64, seed=2))
        P, _ = classic_factorize(S)
        rng = np.random.default_rng(4)
        V, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        assert metric_c2(P.values @ V) <= np.sqrt(3) * metric_c2(P) * (1 + 1e-12)


class TestC2:
    def test_constant(self):
        assert metric_c2(const(np.eye(2))) < 1e-15

    def test_inverse_power(self):
        z = np.exp(2j * np.pi * np.arange(16) / 16)
        P = z[:, None, None] ** -1 * np.eye(2)
        assert metric_c2(P) == pytest.approx(1.0, abs=1e-15)


class TestOuterCheck:
    def test_identity(self):
        assert outer_check(const(np.eye(2))) == 0

    def test_diagonal_outer(self):
        z = np.exp(2j * np.pi * np.arange(64) / 64)
        P = np.zeros((64, 2, 2), dtype=complex)
        P[:, 0, 0] = 1 + 0.5 * z
        P[:, 1, 1] = 1
        assert outer_check(P) < 1e-10

    def test_inner_factor_flagged(self):
        z = np.exp(2j * np.pi * np.arange(64) / 64)
        with pytest.raises(DetVanishesError) as ei:
            outer_check(z[:, None, None] * np.eye(2))
        assert ei.value.node is None

    def test_non_outer_polynomial_has_gap(self):
        z = np.exp(2j * np.pi * np.arange(64) / 64)
        P = (0.5 + z)[:, None, None] * np.eye(1)
        assert outer_check(P) > 0.5

    def test_zero_on_grid(self):
        P = const(np.eye(2)).values.copy()
        P[3] = 0
        with pytest.raises(DetVanishesError) as ei:
            outer_check(P)
        assert ei.value.node == 3


class TestGauge:
    def test_lower_triangular_positive_diagonal(self):
        rng = np.random.default_rng(2)
        C = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        P = const(C)
        V = gauge_lower_triangular(P)
        assert np.abs(V @ V.conj().T - np.eye(3)).max() < 1e-14
        G = apply_gauge(P).values[0]
        assert np.abs(np.triu(G, 1)).max() < 1e-14
        d = np.diagonal(G)
        assert np.all(d.real > 0) and np.abs(d.imag).max() < 1e-14

    def test_constant_unitary_gap(self):
        rng = np.random.default_rng(3)
        V, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        P = generate_density(GeneratorConfig(2, 1, 16, seed=0)).values
        dev, unit = constant_unitary_gap(P, P @ V)
        assert dev < 1e-13 and unit < 1e-13


class TestBenchmark:
    def test_scalar_ratio_near_one(self):
        out = benchmark(GeneratorConfig(1, 2, 64, seed=0), repeats=5)
        assert 0.2 < out["ratio"] < 5
        row = out["table"][0]
        assert row["classic"]["C1"] < 1e-13 and row["doubling"]["C1"] < 1e-13

    def test_scaling_table(self):
        out = benchmark(GeneratorConfig(2, 1, 32, seed=1), r_values=[2, 4], warmup=False)
        assert [row["r"] for row in out["table"]] == [2, 4]
        for row in out["table"]:
            assert row["ratio"] > 0 and len(row["checksum"]) == 64
            assert row["classic"]["max_N"] <= 16
        json.dumps(out)
        assert "cpus" in out["machine"]

    def test_single_algorithm(self):
        out = benchmark(GeneratorConfig(2, 1, 32), algorithms=("classic",), warmup=False)
        assert "doubling" not in out["table"][0] and "ratio" not in out


class TestReport:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            FactorConfig(eps_tail=0)
        with pytest.raises(ValueError):
            FactorConfig(threads=0)
        with pytest.raises(ValueError):
            FactorConfig(tol_analytic=-1)

    def test_threads_from_environment(self, monkeypatch):
        monkeypatch.setenv("MSF_THREADS", "3")
        assert FactorConfig().threads == 3
        monkeypatch.setenv("MSF_THREADS", "junk")
        assert FactorConfig().threads == 1

    def test_json(self):
        rep = FactorReport("classic", 2, 16, C1=1e-15, timings={"total": 0.1})
        d = json.loads(rep.to_json())
        assert d["algorithm"] == "classic" and d["C2"] is None and "machine" in d
