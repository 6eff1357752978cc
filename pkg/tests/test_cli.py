import csv
import io
import json
import subprocess
import sys


from qpoisson.cli import main, read_config


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


SOLVE = ["solve", "--dim", "1", "--grid", "8", "--eps", "0.01",
         "--rhs", "builtin:eigenvector:1", "--mode", "oracle"]


class TestSolve:
    def test_reference_case(self, capsys):
        code, out, _ = run(SOLVE, capsys)
        payload = json.loads(out)
        assert code == 0
        assert payload["fidelity"] >= 1 - 1e-6
        assert payload["params"]["nu"] == 19 and payload["params"]["b"] == 24

    def test_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(SOLVE + ["--out", str(a), "--seed", "3"]) == 0
        assert main(SOLVE + ["--out", str(b), "--seed", "3"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_grid(self, capsys):
        code, _, err = run(["solve", "--dim", "1"], capsys)
        assert code == 1 and "--grid" in err

    def test_grid_not_power_of_two(self, capsys):
        code, _, err = run(["solve", "--grid", "6"], capsys)
        assert code == 1 and "power of two" in err

    def test_bad_mode(self, capsys):
        code, _, err = run(["solve", "--grid", "4", "--mode", "fast"], capsys)
        assert code == 1 and "usage" in err

    def test_config_file_and_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# settings\ngrid = 4\nmode = oracle\nrhs = builtin:eigenvector:2\n")
        assert read_config(cfg)["grid"] == "4"
        code, out, _ = run(["solve", "--config", str(cfg), "--rhs", "builtin:eigenvector:1"], capsys)
        payload = json.loads(out)
        assert code == 0
        assert payload["config"]["M"] == 4 and payload["config"]["rhs"] == "builtin:eigenvector:1"

    def test_bad_config_line(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("grid 4\n")
        code, _, _ = run(["solve", "--config", str(cfg)], capsys)
        assert code == 1

    def test_csv_rhs(self, capsys, tmp_path):
        f = tmp_path / "f.csv"
        f.write_text("1\n2\n3\n")
        code, out, _ = run(["solve", "--grid", "4", "--mode", "oracle", "--rhs", f"csv:{f}"], capsys)
        assert code == 0 and len(json.loads(out)["classical_solution"]) == 3

    def test_sampling(self, capsys):
        code, out, _ = run(SOLVE + ["--sample", "--seed", "1"], capsys)
        assert code == 0 and json.loads(out)["sampling"]["success"]

    def test_sampling_failure_exit_2(self, capsys):
        code, out, _ = run(SOLVE + ["--sample", "--max-trials", "1", "--seed", "0"], capsys)
        assert code == 2 and not json.loads(out)["sampling"]["success"]

    def test_overrides(self, capsys):
        code, out, _ = run(["solve", "--grid", "4", "--mode", "oracle", "--nu", "8"], capsys)
        assert code == 0 and json.loads(out)["params"]["nu"] == 8


class TestVerifyBounds:
    def test_only_restricts_rows(self, capsys):
        code, out, _ = run(["verify-bounds", "--only", "lemma1", "--grid", "4,8", "--nu", "6..8"],
                           capsys)
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert rows[0] == ["bound", "params", "measured_error", "proven_bound", "pass"]
        assert len(rows) == 1 + 6 and {r[0] for r in rows[1:]} == {"w_power_exp"}

    def test_numbered_alias(self, capsys):
        code, out, _ = run(["verify-bounds", "--only", "lemma1", "--grid", "4", "--nu", "6"], capsys)
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0 and [r[0] for r in rows[1:]] == ["w_power_exp"]

    def test_unknown_bound(self, capsys):
        code, _, _ = run(["verify-bounds", "--only", "nope"], capsys)
        assert code == 1

    def test_writes_file(self, tmp_path, capsys):
        out = tmp_path / "b.csv"
        assert main(["verify-bounds", "--only", "eigenvalue_sum", "--grid", "4", "--nu", "6",
                     "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1:] and all(
            line.endswith(",pass") for line in out.read_text().splitlines()[1:])
        assert len(out.read_text().splitlines()) == 1 + 3


class TestSimulateHam:
    def test_block_identity(self, capsys):
        code, out, _ = run(["simulate-ham", "--grid", "4", "--check", "eq20"], capsys)
        payload = json.loads(out)
        assert code == 0 and payload["checks"]["eq20"]["pass"]

    def test_tensor(self, capsys):
        code, out, _ = run(["simulate-ham", "--grid", "4", "--dim", "2", "--check", "tensor"], capsys)
        assert code == 0 and json.loads(out)["checks"]["tensor"]["pass"]

    def test_modes_and_dense(self, capsys):
        code, out, _ = run(["simulate-ham", "--grid", "4", "--nu", "4", "--check", "modes",
                            "--dense", "--t", "2"], capsys)
        payload = json.loads(out)
        assert code == 0 and payload["checks"]["modes"]["pass"]
        assert len(payload["operator"]) == 3 and len(payload["output"]) == 3

    def test_bad_mode(self, capsys):
        code, _, _ = run(["simulate-ham", "--grid", "4", "--mode", "bogus"], capsys)
        assert code == 1

    def test_bad_t(self, capsys):
        code, _, _ = run(["simulate-ham", "--grid", "4", "--t", "999"], capsys)
        assert code == 1

    def test_dense_limit(self, capsys):
        code, _, _ = run(["simulate-ham", "--grid", "16", "--dense"], capsys)
        assert code == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qpoisson", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
