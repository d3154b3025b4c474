import json
import subprocess
import sys

import pytest

from rmtlab import __version__
from rmtlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def strip_timestamp(text):
    return "\n".join(line for line in text.splitlines() if '"created"' not in line)


class TestLimits:
    def test_goe(self, capsys):
        code, out, _ = run(capsys, "limits", "--model", "goe", "--theta", "2", "--sigma", "1")
        doc = json.loads(out)
        assert code == 0
        assert doc["result"] == {"value": 2.5, "branch": "supercritical"}
        assert doc["header"]["version"] == __version__
        assert doc["header"]["params"]["theta"] == 2.0

    def test_spiked_with_transform(self, capsys):
        code, out, _ = run(capsys, "limits", "--model", "spiked", "--theta-sq", "4", "--c", "1", "--z", "5.333333333333333")
        res = json.loads(out)["result"]
        assert code == 0
        assert res["value"] == pytest.approx(16 / 3)
        assert res["g"] == pytest.approx(-0.25, abs=1e-10)

    def test_bound(self, capsys):
        code, out, _ = run(capsys, "limits", "--model", "spiked", "--theorem", "T2i", "--n", "100", "--p", "25", "--t", "0.3")
        assert code == 0
        assert json.loads(out)["result"]["bound_rhs"] == pytest.approx(0.011108996538)

    def test_domain_error(self, capsys):
        code, _, err = run(capsys, "limits", "--model", "spiked", "--theta-sq", "1", "--c", "1")
        assert code == 1 and "theta^2 = 1" in err

    def test_missing_flag(self, capsys):
        code, _, err = run(capsys, "limits", "--model", "goe")
        assert code == 1 and "--theta" in err


class TestEstimate:
    def test_single(self, capsys):
        code, out, _ = run(capsys, "estimate", "--lambda", "5.3333333333", "--c", "1")
        res = json.loads(out)["result"]
        assert code == 0
        assert res["theta_sq_hat"] == pytest.approx(4.0, abs=1e-8)
        assert res["side"] == "above-bulk"

    def test_csv_input(self, capsys, tmp_path):
        path = tmp_path / "eigs.csv"
        path.write_text("eigenvalue\n5.0\n1.0\n0.9\n0.01\n")
        code, out, _ = run(capsys, "estimate", "--input", str(path), "--n", "8", "--r-max", "1", "--format", "csv")
        lines = out.splitlines()
        assert code == 0
        assert lines[0].startswith("# ")
        assert lines[1] == "index,lambda_obs,c,theta_sq_hat,detectable,side"
        assert len(lines) == 4


class TestNet:
    def test_interval(self, capsys):
        code, out, _ = run(capsys, "net", "--m", "1", "--epsilon", "0.3333")
        res = json.loads(out)["result"]
        assert code == 0
        assert res["size"] <= 6 and res["certified"]
        assert res["coverage_radius"] <= 0.3333

    def test_bad_epsilon(self, capsys):
        code, _, err = run(capsys, "net", "--m", "2", "--epsilon", "0.5")
        assert code == 1 and "epsilon" in err


class TestSampleAndApprox:
    def test_sample_reproducible(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert main(["sample", "--model", "goe", "--n", "20", "--spikes", "2", "--seed", "5", "--out", str(path)]) == 0
        assert strip_timestamp(a.read_text()) == strip_timestamp(b.read_text())
        doc = json.loads(a.read_text())
        assert doc["header"]["seed"] == 5 and len(doc["result"]["eigenvalues"]) == 20

    def test_sample_spiked_needs_p(self, capsys):
        code, _, err = run(capsys, "sample", "--model", "spiked", "--n", "20")
        assert code == 1 and "--p" in err

    def test_approx_ev(self, capsys):
        code, out, _ = run(capsys, "approx-ev", "--model", "goe", "--n", "200", "--spikes", "2", "--seed", "1")
        res = json.loads(out)["result"]
        assert code == 0 and res["crosscheck"] <= 1e-8 and "x" not in res

    def test_twelve_digits(self, capsys):
        _, out, _ = run(capsys, "sample", "--model", "goe", "--n", "5", "--format", "csv")
        for line in out.splitlines()[2:]:
            mantissa = line.split(",")[1].lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(mantissa) <= 12


class TestVerifyAndSweep:
    def test_verify_plan_file(self, capsys, tmp_path):
        plan = {
            "spec": {"model": "spiked", "n": 400, "p": 100, "spikes": [], "seed": 2},
            "theorem": "T2i",
            "t_grid": [0.05, 0.1],
            "replicates": 50,
        }
        path = tmp_path / "plan.json"
        path.write_text(json.dumps(plan))
        code, out, _ = run(capsys, "verify", "--plan", str(path), "--format", "csv")
        lines = out.splitlines()
        assert code == 0
        assert json.loads(lines[0][2:])["seed"] == 2
        assert lines[1] == "t,emp,lo95,hi95,bound,dominated"

    def test_verify_threads_identical(self, capsys):
        argv = ["verify", "--model", "goe", "--n", "40", "--theorem", "T1i", "--t-grid", "0,0.2", "--replicates", "40"]
        _, one, _ = run(capsys, *argv)
        _, three, _ = run(capsys, *argv, "--threads", "3")
        assert strip_timestamp(one) == strip_timestamp(three)

    def test_verify_mismatch(self, capsys):
        code, _, err = run(capsys, "verify", "--model", "goe", "--n", "40", "--theorem", "T2i", "--t-grid", "0.1")
        assert code == 1 and "does not apply" in err

    def test_sweep(self, capsys):
        code, out, _ = run(capsys, "sweep", "--model", "goe", "--spikes", "2", "--n-list", "50,100", "--replicates", "10")
        res = json.loads(out)["result"]
        assert code == 0 and len(res["rows"]) == 2


class TestExitCodes:
    def test_unknown_flag(self, capsys):
        code, _, err = run(capsys, "limits", "--bogus")
        assert code == 1 and "usage" in err

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "rmtlab", "estimate", "--lambda", "3.9", "--c", "1"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["result"]["side"] == "in-bulk"

    def test_internal_failure(self, capsys, monkeypatch):
        from rmtlab import cli

        def boom(args):
            raise RuntimeError("unexpected")

        monkeypatch.setitem(cli.COMMANDS, "limits", boom)
        code, _, err = run(capsys, "limits", "--model", "goe", "--theta", "2")
        assert code == 2 and "internal error" in err
