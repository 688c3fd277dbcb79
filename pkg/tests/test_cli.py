import json
import subprocess
import sys

import pytest

from linsofic.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def write_map(capsys, tmp_path, name, *argv):
    path = tmp_path / name
    code = main([*argv, "--out", str(path)])
    capsys.readouterr()
    assert code == 0
    return path


class TestCommands:
    def test_check_quotient(self, capsys):
        code, rep, _ = run_cli(capsys, "check", "--algebra", "laurent", "--field", "gf:101", "--m", "16", "--d", "3")
        assert code == 0 and rep["status"] == "ok"
        assert rep["result"]["certificate"]["certified"]

    def test_check_refuted_is_exit_1(self, capsys):
        code, rep, _ = run_cli(capsys, "check", "--algebra", "laurent", "--field", "gf:5", "--m", "16", "--d", "3")
        assert code == 1 and rep["status"] == "refuted"
        assert rep["result"]["certificate"]["min_rank_seen"] == 10

    def test_build_and_check_window(self, capsys):
        code, rep, _ = run_cli(capsys, "check", "--n", "8", "--d", "2", "--no-invariance-check", "--exhaustive")
        cert = rep["result"]["certificate"]
        assert code == 0 and cert["min_rank_seen"] == 6 and rep["result"]["construction_subspace_dim"] == 4

    def test_build_requires_invariance(self, capsys):
        code, rep, err = run_cli(capsys, "build", "--n", "8", "--d", "2")
        assert code == 2 and rep is None and "PreconditionError" in err

    def test_lld_verify(self, capsys):
        code, rep, _ = run_cli(capsys, "lld", "verify", "--field", "gf:2", "--dims", "2x2", "--d", "2", "--exhaustive")
        sweep = rep["result"]["sweep"]
        assert code == 0 and sweep["families_tested"] == 256 and sweep["bms_violations"] == 0

    def test_lld_bad_dims(self, capsys):
        code, _, err = run_cli(capsys, "lld", "verify", "--dims", "2by2")
        assert code == 2 and "dims" in err

    def test_tile(self, capsys):
        code, rep, _ = run_cli(capsys, "tile", "--n", "8", "--d", "4", "--no-invariance-check", "--tile-n", "4", "--maximal")
        t = rep["result"]["tiling"]
        assert code == 0 and t["ell"] == 2 and t["roots"][1] == ["0"] * 4 + ["1"] + ["0"] * 3
        assert rep["result"]["hyperfinite"]["codimension"] == 0

    def test_amplify(self, capsys):
        code, rep, _ = run_cli(capsys, "amplify", "--algebra", "laurent", "--m", "16", "--targets", "33,47,100")
        rows = rep["result"]["amplification"]["targets"]
        assert code == 0 and [(r["copies"], r["pad"]) for r in rows] == [(2, 1), (2, 15), (6, 4)]
        assert all(r["rank_identity"] for r in rows)

    def test_amplify_too_small(self, capsys):
        code, _, err = run_cli(capsys, "amplify", "--algebra", "laurent", "--m", "16", "--targets", "15")
        assert code == 2 and "DimensionMismatch" in err

    def test_quotient_rep(self, capsys):
        code, rep, _ = run_cli(capsys, "quotient-rep", "--algebra", "heisenberg", "--m", "2", "--d", "1")
        assert code == 0 and rep["result"]["map"]["n"] == 8


class TestInputErrors:
    def test_conjugate_mismatch(self, capsys, tmp_path):
        a = write_map(capsys, tmp_path, "a.json", "build", "--n", "8", "--d", "1", "--no-invariance-check")
        b = write_map(capsys, tmp_path, "b.json", "build", "--n", "9", "--d", "1", "--no-invariance-check")
        code, _, err = run_cli(capsys, "conjugate", "--map-a", str(a), "--map-b", str(b))
        assert code == 2 and "DimensionMismatch" in err

    @pytest.mark.parametrize("eps", ["0", "-1/4", "abc"])
    def test_bad_epsilon(self, capsys, eps):
        code, _, err = run_cli(capsys, "demo", "weak-stability", f"--epsilon={eps}")
        assert code == 2 and err.startswith("error:")

    def test_argparse_errors_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["check", "--d", "two"])
        assert exc.value.code == 2

    def test_bad_field(self, capsys):
        code, _, _ = run_cli(capsys, "check", "--field", "gf:4", "--m", "3", "--algebra", "laurent")
        assert code == 2

    def test_bad_algebra(self, capsys):
        code, _, err = run_cli(capsys, "check", "--algebra", "free", "--m", "3")
        assert code == 2 and "free" in err

    def test_missing_source(self, capsys):
        code, _, err = run_cli(capsys, "check")
        assert code == 2 and "--map" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "check", "--map", str(tmp_path / "nope.json"))
        assert code == 2

    def test_unknown_config_field(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"colour": "red"}))
        code, _, err = run_cli(capsys, "check", "--config", str(cfg))
        assert code == 2 and "colour" in err

    def test_custom_algebra_has_no_window(self, capsys):
        alg = json.dumps({"kind": "custom", "letters": "ab", "rules": [["ba", "ab"]]})
        code, _, err = run_cli(capsys, "build", "--algebra", alg, "--n", "2")
        assert code == 2 and "UnsupportedWindow" in err


class TestConfig:
    def test_config_overrides_flags(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"algebra": {"kind": "laurent", "rank": 1}, "field": "gf:101", "params": {"m": 16, "d": 3}}))
        code, rep, _ = run_cli(capsys, "check", "--config", str(cfg), "--m", "4")
        assert code == 0 and rep["config"]["m"] == 16 and rep["result"]["n"] == 16

    def test_echo_and_exact_rationals(self, capsys):
        _, rep, _ = run_cli(capsys, "check", "--n", "8", "--d", "2", "--no-invariance-check")
        assert rep["config"]["algebra"] == {"kind": "polynomial", "vars": 1}
        assert rep["result"]["certificate"]["threshold"] == "4"
        assert "timing_seconds" not in rep


class TestRoundTrip:
    def test_recertifies_identically(self, capsys, tmp_path):
        path = write_map(capsys, tmp_path, "phi.json", "build", "--n", "8", "--d", "2", "--no-invariance-check", "--field", "gf:3")
        _, direct, _ = run_cli(capsys, "check", "--n", "8", "--d", "2", "--no-invariance-check", "--field", "gf:3")
        _, loaded, _ = run_cli(capsys, "check", "--map", str(path), "--d", "2")
        assert direct["result"]["certificate"] == loaded["result"]["certificate"]

    def test_conjugate_from_files(self, capsys, tmp_path):
        a = write_map(capsys, tmp_path, "a.json", "build", "--n", "32", "--d", "8", "--no-invariance-check")
        b = write_map(capsys, tmp_path, "b.json", "quotient-rep", "--m", "32", "--d", "8")
        code, rep, _ = run_cli(capsys, "conjugate", "--map-a", str(a), "--map-b", str(b), "--epsilon", "1/2", "--no-matrix")
        conj = rep["result"]["conjugacy"]
        assert code == 0 and "M" not in conj and conj["achieved"] == "1/32"


class TestDeterminism:
    def test_byte_identical(self, tmp_path):
        argv = ["tile", "--algebra", "laurent", "--field", "gf:7", "--n", "12", "--d", "3",
                "--no-invariance-check", "--tile-n", "1", "--strategy", "random-first", "--seed", "17"]
        outs = []
        for i in range(2):
            path = tmp_path / f"r{i}.json"
            assert main([*argv, "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "linsofic", "--version"], capture_output=True, text=True)
        assert res.returncode == 0 and "linsofic" in res.stdout
