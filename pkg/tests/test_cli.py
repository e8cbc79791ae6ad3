import json
import subprocess
import sys

import numpy as np
import pytest

from qpdecouple.cli import EXIT_MALFORMED, EXIT_USAGE, EXIT_VERIFY_FAILED, main, parse_matrix_text


def write_plain(path, M):
    path.write_text("\n".join(" ".join(repr(float(v)) for v in row) for row in M) + "\n")


@pytest.fixture
def fixtures(tmp_path):
    assert main(["generate", "--preset", "cccstate", "-o", str(tmp_path / "ccc.json")]) == 0
    assert main(["generate", "--preset", "twomode", "--params", "2,1,0.5,0.5", "-o", str(tmp_path / "two.json")]) == 0
    return tmp_path


class TestAnalyze:
    def test_exit_codes(self, fixtures):
        assert main(["analyze", str(fixtures / "ccc.json"), "-o", str(fixtures / "r.json")]) == 1
        assert main(["analyze", str(fixtures / "two.json"), "-o", str(fixtures / "r.json")]) == 0

    def test_report_contents(self, fixtures):
        out = fixtures / "r.json"
        main(["analyze", str(fixtures / "two.json"), "--with-network", "-o", str(out)])
        doc = json.loads(out.read_text())
        assert doc["verdict"] == "decoupled"
        assert doc["input_digest"].startswith("sha256:")
        assert doc["residual"] < 1e-12
        assert len(doc["network"]["elements"]) >= 1
        E = np.array(doc["E_total"]["real"]) + 1j * np.array(doc["E_total"]["imag"])
        assert np.allclose(E @ E.conj().T, np.eye(2))

    def test_witness_in_report(self, fixtures):
        out = fixtures / "r.json"
        main(["analyze", str(fixtures / "ccc.json"), "-o", str(out)])
        doc = json.loads(out.read_text())
        assert doc["witness"]["j"] == 0 and doc["witness"]["k"] == 1
        assert doc["E_total"] is None

    def test_stdout(self, fixtures, capsys):
        main(["analyze", str(fixtures / "two.json")])
        assert json.loads(capsys.readouterr().out)["verdict"] == "decoupled"

    def test_generated_fixture_is_exact(self, fixtures):
        doc = json.loads((fixtures / "ccc.json").read_text())
        assert doc["matrix"][0] == [1.5, 0.25, 0.5, 0.0]
        assert doc["ordering"] == "qpqp" and doc["n"] == 2


class TestParity:
    @pytest.mark.parametrize("name", ["ccc", "two"])
    def test_structured_plain_same_report(self, fixtures, name):
        M = json.loads((fixtures / f"{name}.json").read_text())["matrix"]
        write_plain(fixtures / f"{name}.txt", M)
        main(["analyze", str(fixtures / f"{name}.json"), "-o", str(fixtures / "a.json")])
        main(["analyze", str(fixtures / f"{name}.txt"), "-o", str(fixtures / "b.json")])
        assert (fixtures / "a.json").read_text() == (fixtures / "b.json").read_text()

    def test_grouped_ordering_converted(self):
        s = parse_matrix_text("1 0 0.2 0\n0 2 0 0\n0.2 0 3 0\n0 0 0 4\n", ordering="qqpp")
        # grouped (q1 q2 p1 p2) -> interleaved (q1 p1 q2 p2): cov(q1, p1) = 0.2
        assert s.M[0, 1] == 0.2 and s.ordering == "interleaved"


class TestVerify:
    def test_reports_verify(self, fixtures):
        for name in ("ccc", "two"):
            rep = fixtures / f"{name}-report.json"
            main(["analyze", str(fixtures / f"{name}.json"), "--with-network", "-o", str(rep)])
            assert main(["verify", str(rep), str(fixtures / f"{name}.json")]) == 0

    def test_tampered_residual(self, fixtures):
        rep = fixtures / "r.json"
        main(["analyze", str(fixtures / "two.json"), "-o", str(rep)])
        doc = json.loads(rep.read_text())
        doc["residual"] = 0.5
        rep.write_text(json.dumps(doc))
        assert main(["verify", str(rep), str(fixtures / "two.json")]) == EXIT_VERIFY_FAILED

    def test_wrong_input(self, fixtures):
        rep = fixtures / "r.json"
        main(["analyze", str(fixtures / "two.json"), "-o", str(rep)])
        assert main(["verify", str(rep), str(fixtures / "ccc.json")]) == EXIT_VERIFY_FAILED

    def test_false_verdict(self, fixtures):
        rep = fixtures / "r.json"
        main(["analyze", str(fixtures / "two.json"), "-o", str(rep)])
        doc = json.loads(rep.read_text())
        doc["verdict"] = "not_decouplable"
        doc["witness"] = {"j": 0, "k": 1, "real": 0.1, "imag": 0.1}
        rep.write_text(json.dumps(doc))
        assert main(["verify", str(rep), str(fixtures / "two.json")]) == EXIT_VERIFY_FAILED


class TestErrors:
    def test_unknown_preset(self):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--preset", "squeezed-cat"])
        assert exc.value.code == EXIT_USAGE

    def test_bad_params(self, tmp_path):
        assert main(["generate", "--preset", "twomode", "--params", "1,2"]) == EXIT_USAGE

    def test_nonpositive_params(self):
        assert main(["generate", "--preset", "twomode", "--params", "1,1,0,1"]) == EXIT_MALFORMED

    @pytest.mark.parametrize(
        "text",
        [
            "1 2\n3 4 5\n",
            "1 0.5\n0 1\n",
            "1 0 0\n0 1 0\n0 0 1\n",
            "nan 0\n0 1\n",
            '{"n": 3, "matrix": [[1, 0], [0, 1]]}',
            '{"matrix": ',
        ],
    )
    def test_malformed(self, tmp_path, text):
        f = tmp_path / "bad.txt"
        f.write_text(text)
        assert main(["analyze", str(f)]) == EXIT_MALFORMED

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "nope.json")]) == EXIT_MALFORMED

    def test_symmetry_tolerance(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("1 1e-10\n0 1\n")
        assert main(["check", str(f)]) == 0


class TestOtherCommands:
    def test_check(self, fixtures, capsys):
        main(["check", str(fixtures / "ccc.json")])
        doc = json.loads(capsys.readouterr().out)
        assert doc["physical"] and doc["cross_corr_norm"] == 0.25

    def test_takagi(self, tmp_path, capsys):
        f = tmp_path / "y.json"
        f.write_text(json.dumps({"real": [[0, 1], [1, 0]], "imag": [[0, 0], [0, 1]]}))
        assert main(["takagi", str(f)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert np.allclose(doc["sigma"], [(1 + 5**0.5) / 2, (5**0.5 - 1) / 2])
        assert doc["reconstruction_residual"] < 1e-12

    def test_takagi_nonsymmetric(self, tmp_path):
        f = tmp_path / "y.txt"
        f.write_text("0 1\n2 0\n0 0\n0 0\n")
        assert main(["takagi", str(f)]) == EXIT_MALFORMED

    def test_oracle(self, fixtures, capsys):
        assert main(["oracle", str(fixtures / "two.json"), "--restarts", "4"]) == 0
        assert json.loads(capsys.readouterr().out)["min_residual"] < 1e-7

    def test_random_pure(self, tmp_path):
        out = tmp_path / "p.json"
        assert main(["generate", "--preset", "random-pure", "--modes", "3", "--seed", "4", "-o", str(out)]) == 0
        assert main(["analyze", str(out), "-o", str(tmp_path / "r.json")]) == 0

    def test_module_entry_point(self, fixtures):
        proc = subprocess.run(
            [sys.executable, "-m", "qpdecouple", "analyze", str(fixtures / "ccc.json")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
        assert json.loads(proc.stdout)["verdict"] == "not_decouplable"


class TestFixtureExamples:
    def test_vacuum_identity(self, tmp_path, capsys):
        f = tmp_path / "vac.json"
        main(["generate", "--preset", "vacuum", "-o", str(f)])
        assert main(["analyze", str(f)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert np.allclose(doc["E_total"]["real"], np.eye(2)) and np.allclose(doc["E_total"]["imag"], 0)

    def test_twomode_network_shape(self, fixtures, capsys):
        main(["analyze", str(fixtures / "two.json"), "--with-network"])
        kinds = [e["type"] for e in json.loads(capsys.readouterr().out)["network"]["elements"]]
        assert kinds.count("beamsplitter") == 1 and kinds.count("phase") == 3

    def test_check_vacuum(self, tmp_path, capsys):
        f = tmp_path / "vac.json"
        main(["generate", "--preset", "vacuum", "--modes", "3", "-o", str(f)])
        capsys.readouterr()
        main(["check", str(f)])
        assert np.allclose(json.loads(capsys.readouterr().out)["symplectic_eigenvalues"], 0.5)

    def test_takagi_zero(self, tmp_path, capsys):
        f = tmp_path / "z.json"
        f.write_text(json.dumps({"real": [[0, 0], [0, 0]], "imag": [[0, 0], [0, 0]]}))
        main(["takagi", str(f)])
        assert json.loads(capsys.readouterr().out)["sigma"] == [0.0, 0.0]
