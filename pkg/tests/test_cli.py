import csv
import json

import mpmath
import pytest

from gauss_deanon import io as fio
from gauss_deanon.cli import SEED_ENV, main, thresholds_table

from oracles import closed_form_delta, closed_form_delta_structure, exact_required_m


def _write(path, text):
    path.write_text(text)
    return path


@pytest.fixture
def generated(tmp_path):
    conf = _write(tmp_path / "gen.conf", "n = 6\ns = 2\nm = 20000\n")
    out = tmp_path / "out"
    assert main(["generate", str(conf), str(out), "--seed", "5"]) == 0
    return out


class TestGenerate:
    def test_files_and_summary(self, generated, capsys):
        names = sorted(p.name for p in generated.iterdir())
        assert names == ["permutation.txt", "population.txt", "traces.txt"]
        y, sigma2 = fio.read_traces(generated / "traces.txt")
        assert (y.n, y.m, sigma2) == (6, 20000, 1.0)

    def test_minimal_config_with_flag_m(self, tmp_path, capsys):
        conf = _write(tmp_path / "c", "n = 4\ns = 2\n")
        assert main(["generate", str(conf), str(tmp_path / "o"), "--m", "5"]) == 0
        out = capsys.readouterr().out
        assert "n: 4" in out and "min block eigenvalue" in out

    def test_deterministic(self, tmp_path, generated):
        conf = _write(tmp_path / "gen.conf", "n = 6\ns = 2\nm = 20000\n")
        again = tmp_path / "again"
        main(["generate", str(conf), str(again), "--seed", "5"])
        for name in ("population.txt", "traces.txt", "permutation.txt"):
            assert (again / name).read_bytes() == (generated / name).read_bytes()

    def test_unknown_key(self, tmp_path, capsys):
        conf = _write(tmp_path / "c", "n = 4\nsz = 2\n")
        assert main(["generate", str(conf), str(tmp_path / "o"), "--m", "5"]) != 0
        err = capsys.readouterr().err
        assert "'sz'" in err and ":2:" in err

    def test_bad_value(self, tmp_path, capsys):
        conf = _write(tmp_path / "c", "n = four\n")
        assert main(["generate", str(conf), str(tmp_path / "o"), "--m", "5"]) != 0
        assert "'n'" in capsys.readouterr().err

    def test_env_seed_fallback(self, tmp_path, monkeypatch):
        conf = _write(tmp_path / "c", "n = 4\ns = 2\nm = 3\n")
        monkeypatch.setenv(SEED_ENV, "11")
        main(["generate", str(conf), str(tmp_path / "env")])
        main(["generate", str(conf), str(tmp_path / "flag"), "--seed", "11"])
        main(["generate", str(conf), str(tmp_path / "other"), "--seed", "12"])
        env = (tmp_path / "env" / "traces.txt").read_bytes()
        assert env == (tmp_path / "flag" / "traces.txt").read_bytes()
        assert env != (tmp_path / "other" / "traces.txt").read_bytes()


class TestAttack:
    def test_report(self, generated, capsys):
        capsys.readouterr()
        rc = main(
            [
                "attack",
                str(generated / "traces.txt"),
                str(generated / "population.txt"),
                "--perm",
                str(generated / "permutation.txt"),
            ]
        )
        assert rc == 0
        rep = json.loads(capsys.readouterr().out)
        perm = fio.read_permutation(generated / "permutation.txt")
        assert rep["truth_index"] == int(perm.forward[0])
        assert isinstance(rep["success"], bool)

    def test_structure_only_ignores_correlations(self, generated, tmp_path, capsys):
        lines = (generated / "population.txt").read_text().splitlines()
        scrambled = [ln if len(ln.split()) != 3 or ln.startswith("#") else " ".join(ln.split()[:2] + ["0.95"]) for ln in lines]
        # header and means lines have other arities; only "u v rho" rows change
        _write(tmp_path / "scrambled.txt", "\n".join(scrambled) + "\n")
        assert fio.read_population(tmp_path / "scrambled.txt").correlation_coeffs != fio.read_population(
            generated / "population.txt"
        ).correlation_coeffs
        outs = []
        for know in (generated / "population.txt", tmp_path / "scrambled.txt"):
            capsys.readouterr()
            main(["attack", str(generated / "traces.txt"), str(know), "--regime", "structure_only"])
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]

    def test_missing_file(self, tmp_path, capsys):
        assert main(["attack", str(tmp_path / "nope.txt"), str(tmp_path / "nope2.txt")]) != 0

    def test_shape_mismatch(self, generated, tmp_path):
        conf = _write(tmp_path / "c", "n = 4\ns = 2\nm = 3\n")
        main(["generate", str(conf), str(tmp_path / "small")])
        rc = main(["attack", str(generated / "traces.txt"), str(tmp_path / "small" / "population.txt")])
        assert rc != 0


class TestSweep:
    def test_one_cell(self, tmp_path):
        spec = _write(tmp_path / "spec", "n = 8\ns = 2\nm = 200\ntrials = 5\nseed = 3\n")
        out = tmp_path / "out.csv"
        assert main(["sweep", str(spec), str(out), "--emit-gnuplot"]) == 0
        rows = list(csv.reader(out.open()))
        assert tuple(rows[0]) == fio.CSV_HEADER
        assert len(rows) == 2
        assert out.with_suffix(".gp").exists()
        assert b"\r\n" not in out.read_bytes()

    def test_rerun_byte_identical(self, tmp_path):
        spec = _write(tmp_path / "spec", "n = 6, 10\ns = 2\nm = 150\ntrials = 6\n")
        main(["sweep", str(spec), str(tmp_path / "a.csv"), "--seed", "9"])
        main(["sweep", str(spec), str(tmp_path / "b.csv"), "--seed", "9", "--jobs", "2"])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_regime_m_column(self, tmp_path):
        spec = _write(
            tmp_path / "spec",
            "regime = independent, structure_only, full_knowledge\nn = 100\ns = 2\nalpha = 0.5\ntrials = 1\n",
        )
        out = tmp_path / "r.csv"
        main(["sweep", str(spec), str(out)])
        ms = {r["regime"]: int(r["m"]) for r in csv.DictReader(out.open())}
        assert ms["independent"] > ms["structure_only"] > ms["full_knowledge"]
        assert (ms["independent"], ms["structure_only"], ms["full_knowledge"]) == (100_000, 1000, 216)

    def test_spec_without_n(self, tmp_path):
        spec = _write(tmp_path / "spec", "s = 2\n")
        assert main(["sweep", str(spec), str(tmp_path / "x.csv")]) != 0


def test_scaling_smoke(capsys):
    assert main(["scaling", "--n-grid", "6,10", "--trials", "4", "--m", "50"]) == 0
    assert "decay observed" in capsys.readouterr().out


def test_thresholds_match_arbitrary_precision(capsys):
    assert main(["thresholds", "--n-grid", "10,100,1000", "--s", "1,2,3", "--alpha", "0.5"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 9
    for r in rows:
        n, s = int(r["n"]), int(r["s"])
        exact = (closed_form_delta(n, s, 0.5), closed_form_delta_structure(n, s, 0.5))
        for printed, value in zip((r["delta_n"], r["delta_struct"]), exact):
            # one unit in the 15th significant digit
            unit = mpmath.power(10, mpmath.floor(mpmath.log10(value)) - 14)
            assert abs(mpmath.mpf(printed) - value) <= unit
        for col, regime in (("m_full", "full_knowledge"), ("m_struct", "structure_only"), ("m_indep", "independent")):
            assert int(r[col]) == exact_required_m(n, s, 0.5, 1, regime)


def test_thresholds_table_header():
    assert thresholds_table((100,), (2,), 0.5, 1.0).splitlines()[1].endswith(",216,1000,100000")
