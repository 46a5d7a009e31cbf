import json
import struct
import subprocess
import sys

import numpy as np
import pytest

from msfact.bench import density_from_polynomial
from msfact.cli import CliConfig, UsageError, main
from msfact.formats import read_msfc, read_msfg, write_msfg
from msfact.laurent import GridSamples


@pytest.fixture
def density(tmp_path):
    path = tmp_path / "s.msfg"
    assert main(["generate", "--r", "4", "--order", "2", "--grid", "64", "--seed", "7", "--out", str(path)]) == 0
    return path


def load(path):
    with open(path) as fh:
        return json.load(fh)


class TestGenerate:
    def test_header(self, tmp_path):
        out = tmp_path / "s.msfg"
        assert main(["generate", "--r", "16", "--order", "5", "--grid", "256", "--seed", "7", "--out", str(out)]) == 0
        head = out.read_bytes()[:16]
        assert head[:4] == b"MSFG" and struct.unpack("<3I", head[4:]) == (1, 16, 256)

    def test_deterministic(self, tmp_path, density):
        again = tmp_path / "again.msfg"
        main(["generate", "--r", "4", "--order", "2", "--grid", "64", "--seed", "7", "--out", str(again)])
        assert again.read_bytes() == density.read_bytes()

    def test_bad_grid(self, tmp_path, capsys):
        assert main(["generate", "--r", "4", "--order", "1", "--grid", "100", "--out", str(tmp_path / "x")]) == 2
        assert "power of two" in capsys.readouterr().err

    def test_grid_too_small_for_order(self, tmp_path):
        assert main(["generate", "--r", "4", "--order", "8", "--grid", "16", "--out", str(tmp_path / "x")]) == 2


class TestFactorize:
    def test_identity_fixture(self, tmp_path):
        s = tmp_path / "eye.msfg"
        write_msfg(s, density_from_polynomial(np.eye(3), 32))
        rep = tmp_path / "r.json"
        assert main(["factorize", str(s), "--report", str(rep)]) == 0
        d = load(rep)
        assert d["C1"] < 1e-13 and d["C2"] < 1e-13

    @pytest.mark.parametrize("algorithm", ["classic", "doubling"])
    def test_outputs_and_verify_round_trip(self, tmp_path, density, algorithm):
        p, c, rep, ver = (tmp_path / n for n in ("p.msfg", "p.msfc", "r.json", "v.json"))
        argv = ["factorize", str(density), "--algorithm", algorithm, "--out", str(p),
                "--out-coeffs", str(c), "--report", str(rep)]
        assert main(argv) == 0
        d = load(rep)
        # a 64-point grid resolves the factor only to a few percent
        assert d["algorithm"] == algorithm and d["C1"] < 1e-12 and d["C2"] < 5e-2
        assert d["library_version"] and "machine" in d
        assert read_msfg(p).r == 4 and read_msfc(c).r == 4
        for factor in (p, c):
            assert main(["verify", str(density), str(factor), "--report", str(ver)]) == 0
            v = load(ver)
            assert abs(v["C1"] - d["C1"]) < 1e-12 and abs(v["C2"] - d["C2"]) < 1e-12

    def test_both_algorithms_agree(self, tmp_path):
        s = tmp_path / "s.msfg"
        main(["generate", "--r", "16", "--order", "5", "--grid", "256", "--seed", "7", "--out", str(s)])
        c1 = {}
        for alg in ("classic", "doubling"):
            main(["factorize", str(s), "--algorithm", alg, "--report", str(tmp_path / f"{alg}.json")])
            c1[alg] = load(tmp_path / f"{alg}.json")["C1"]
        assert max(c1.values()) < 1e-10

    def test_normalize(self, tmp_path, density):
        p = tmp_path / "p.msfg"
        assert main(["factorize", str(density), "--normalize", "--out", str(p), "--report", str(tmp_path / "r.json")]) == 0
        C0 = read_msfg(p).coefficients()[0]
        assert np.abs(np.triu(C0, 1)).max() < 1e-12
        assert np.all(np.diagonal(C0).real > 0)
        assert load(tmp_path / "r.json")["normalized"] is True

    def test_corrupted_magic(self, tmp_path, density, capsys):
        bad = tmp_path / "bad.msfg"
        bad.write_bytes(b"MSXG" + density.read_bytes()[4:])
        assert main(["factorize", str(bad)]) == 2
        assert "offset 0" in capsys.readouterr().err

    def test_truncated(self, tmp_path, density):
        bad = tmp_path / "bad.msfg"
        bad.write_bytes(density.read_bytes()[:100])
        assert main(["factorize", str(bad)]) == 2

    def test_numerical_failure_exit_three(self, tmp_path):
        v = np.broadcast_to(np.eye(2, dtype=complex), (16, 2, 2)).copy()
        v[5] = [[1, 2], [2, 1]]
        s = tmp_path / "npd.msfg"
        write_msfg(s, GridSamples(v))
        rep = tmp_path / "r.json"
        assert main(["factorize", str(s), "--report", str(rep)]) == 3
        assert "S(z_5)" in load(rep)["failure"]["error"]

    def test_missing_file(self, tmp_path):
        assert main(["factorize", str(tmp_path / "nope.msfg")]) == 2

    def test_threads_flag_beats_environment(self, tmp_path, density, monkeypatch):
        monkeypatch.setenv("MSF_THREADS", "3")
        rep = tmp_path / "r.json"
        main(["factorize", str(density), "--report", str(rep)])
        assert load(rep)["config"]["threads"] == 3
        main(["factorize", str(density), "--threads", "2", "--report", str(rep)])
        assert load(rep)["config"]["threads"] == 2


class TestVerify:
    def test_identity_pair(self, tmp_path, capsys):
        s = tmp_path / "eye.msfg"
        write_msfg(s, density_from_polynomial(np.eye(2), 16))
        assert main(["verify", str(s), str(s)]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["C1"] == 0 and d["C2"] < 1e-15 and d["outer_gap"] == 0

    def test_mismatched_r(self, tmp_path, density):
        other = tmp_path / "o.msfg"
        write_msfg(other, density_from_polynomial(np.eye(2), 64))
        assert main(["verify", str(density), str(other)]) == 2


class TestBench:
    def test_baseline_only(self, tmp_path):
        out = tmp_path / "b.json"
        assert main(["bench", "--r", "1", "2", "--order", "1", "--grid", "16", "--algorithms", "classic",
                     "--out", str(out)]) == 0
        d = load(out)
        assert [row["r"] for row in d["table"]] == [1, 2]
        assert all("doubling" not in row for row in d["table"])
        assert "cpus" in d["machine"]

    def test_unknown_algorithm(self):
        assert main(["bench", "--r", "2", "--algorithms", "fast"]) == 2


class TestConfig:
    def test_validation(self):
        with pytest.raises(UsageError):
            CliConfig("factorize", grid=100)
        with pytest.raises(UsageError):
            CliConfig("factorize", eps_tail=0)
        with pytest.raises(UsageError):
            CliConfig("factorize", threads=0)

    def test_usage_errors_exit_two(self):
        assert main([]) == 2
        assert main(["factorize"]) == 2


def test_entry_point(tmp_path):
    out = tmp_path / "s.msfg"
    run = subprocess.run([sys.executable, "-m", "msfact.cli", "generate", "--r", "2", "--order", "1",
                          "--grid", "8", "--out", str(out)], capture_output=True, text=True)
    assert run.returncode == 0 and out.exists()
