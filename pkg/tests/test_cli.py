import csv
import io
import json
import math
import subprocess
import sys

import pytest

from landau_tails.cli import EXIT_CERT, EXIT_INPUT, EXIT_OK, main
from landau_tails.config import smoke_config


@pytest.fixture()
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(smoke_config(n=1, E_grid=(0.45, 0.35, 0.2, math.exp(-9))).to_text())
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_nu(capsys):
    code, out, _ = run(capsys, "nu", "--q", 0, "--b", 2, "--R", 1, "--k", 0)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and float(rows[0]["nu_exact"]) == pytest.approx(1 - math.exp(-1))


def test_nu_range_has_blank_asymptotic_below_rho(capsys):
    code, out, _ = run(capsys, "nu", "--q", 1, "--R", 2, "--k-range", "0:4")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["k"]) for r in rows] == [0, 1, 2, 3, 4]
    assert rows[0]["nu_asym"] == "" and rows[4]["ratio"] != ""


def test_smallball(capsys):
    code, out, _ = run(capsys, "smallball", "--kappa", 1, "--omega-plus", 1, "--n", 2, "--t", 0.1)
    (row,) = csv.DictReader(io.StringIO(out))
    assert code == EXIT_OK
    assert float(row["p_lower"]) <= 0.005 <= float(row["p_upper"])
    assert float(row["p_asym"]) == pytest.approx(0.005)


def test_certify_le2(tmp_path, capsys):
    out = tmp_path / "le2.json"
    code, _, _ = run(capsys, "certify-le2", "--q", 0, "--R", 4, "--out", out)
    data = json.loads(out.read_text())
    assert code == EXIT_OK and data["lemma"] == "le2" and data["pass"] is True


def test_verify_f1(tmp_path, capsys):
    out = tmp_path / "f1.json"
    code, _, _ = run(capsys, "verify-f1", "--q", 0, "--k-range", "100,1000", "--out", out)
    assert code == EXIT_OK and json.loads(out.read_text())["lemma"] == "f1"


def test_verify_f1_failing_certificate_exit_code(tmp_path, capsys):
    # with f(k) = sqrt(k) the deviation does not decay
    out = tmp_path / "x.json"
    code, _, _ = run(capsys, "verify-f1", "--q", 0, "--f-power", 0.5, "--k-range", "100,1000,10000", "--out", out)
    assert code == EXIT_CERT and json.loads(out.read_text())["pass"] is False


def test_ids_and_fit(tmp_path, capsys, tiny_cfg):
    csv_path = tmp_path / "est.csv"
    code, _, _ = run(capsys, "ids", "--config", tiny_cfg, "--out", csv_path)
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "est.manifest.json").read_text())
    assert set(manifest) == {"seed", "kappa", "omega_plus", "a", "n", "b", "q", "K"}
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 4 and rows[0]["status"] == "ok"
    code, _, err = run(capsys, "lifshitz-fit", "--input", csv_path)
    assert code == EXIT_INPUT and "at least 4" in err


def test_lifshitz_fit_synthetic(tmp_path, capsys):
    path = tmp_path / "syn.csv"
    lines = ["E,N_hat"] + [f"{math.exp(-x)!r},{math.exp(-x * x)!r}" for x in range(4, 13)]
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "lifshitz-fit", "--input", path)
    assert code == EXIT_OK and abs(json.loads(out)["slope"] - 2) <= 1e-10


def test_thr2(tmp_path, capsys, tiny_cfg):
    out = tmp_path / "thr2.json"
    code, _, _ = run(capsys, "thr2", "--config", tiny_cfg, "--E", math.exp(-9), "--out", out)
    certs = json.loads(out.read_text())
    assert code == EXIT_OK and len(certs) == 8 and all(c["pass"] for c in certs)


@pytest.mark.parametrize("cmd", ["nu", "verify-f1", "certify-le2", "ids", "thr2", "smallball", "lifshitz-fit"])
def test_schema(capsys, cmd):
    code, out, _ = run(capsys, cmd, "--schema")
    assert code == EXIT_OK and out.strip()


def test_input_errors(tmp_path, capsys):
    assert run(capsys, "ids")[0] == EXIT_INPUT
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    code, _, err = run(capsys, "ids", "--config", bad)
    assert code == EXIT_INPUT and "unknown key" in err
    assert run(capsys, "certify-le2", "--bigC", 1.0)[0] == EXIT_INPUT
    assert run(capsys, "ids", "--config", tmp_path / "missing.cfg")[0] == EXIT_INPUT
    assert run(capsys, "smallball", "--n", 100, "--t", 0.1)[0] == EXIT_INPUT


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from landau_tails import cli
    from landau_tails.certificate import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure("no convergence")

    monkeypatch.setattr(cli, "small_ball_exact", boom)
    assert run(capsys, "smallball", "--n", 2, "--t", 0.1)[0] == 4


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "landau_tails.cli", "smallball", "--n", "2", "--t", "0.1"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("kappa,")
