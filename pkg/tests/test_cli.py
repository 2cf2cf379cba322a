import json

import numpy as np
import pytest

from mictomo import cli
from mictomo.linalg import matrix_to_json
from mictomo.measurement import computational_basis_povm, povm_to_json


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_mic_reports(capsys, tmp_path):
    p = tmp_path / "povm.json"
    p.write_text(json.dumps(povm_to_json(computational_basis_povm(4))["effects"]))
    code, out, _ = run(capsys, "mic", "--povm", str(p), "--report", "trace-norm")
    assert code == 0 and json.loads(out)["mic_trace_norm"] == pytest.approx(4)
    code, out, _ = run(capsys, "mic", "--pauli", "XY", "--report", "spectrum")
    lam = json.loads(out)["spectrum"]
    assert code == 0 and np.allclose(lam[:4], 1) and np.allclose(lam[4:], 0, atol=1e-12)
    code, out, _ = run(capsys, "mic", "--computational", "2", "--report", "bound", "--eps", "0.001")
    assert code == 0 and json.loads(out)["n_lower_body"] == pytest.approx(16 / (1e-6 * 2))
    code, _, err = run(capsys, "mic", "--computational", "2", "--report", "bound")
    assert code == 2 and "eps" in err


def test_mic_bad_povm_file(capsys, tmp_path):
    p = tmp_path / "povm.json"
    p.write_text(json.dumps([matrix_to_json(np.eye(2) / 2)]))
    code, _, err = run(capsys, "mic", "--povm", str(p))
    assert code == 2 and "identity" in err


def test_lowerbound(capsys):
    code, out, _ = run(capsys, "lowerbound", "pauli", "--n-qubits", "4", "--eps", "0.001")
    rep = json.loads(out)
    assert code == 0 and rep["exponent_base"] >= 9.118 and rep["intermediate"]["g_of_w"] == 189
    code, out, _ = run(capsys, "lowerbound", "k-outcome", "--dim", "8", "--k", "2", "--eps", "0.001")
    assert code == 0 and json.loads(out)["mic_trace_norm_sup"] == 2


def test_hardinstance(capsys):
    code, out, _ = run(capsys, "hardinstance", "sample", "--n-qubits", "3", "--eps", "0.004", "--seed", "1",
                       "--count", "5", "--check-validity")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "index,trace_distance,clamp_factor,meets_eps" and len(lines) == 6
    code, out, _ = run(capsys, "hardinstance", "kappa", "--n-qubits", "2", "--eps", "0.004", "--seed", "1",
                       "--count", "2000", "--ell", "8")
    assert code == 0 and json.loads(out)["kappa"] > 0


def test_tomo_reports(capsys):
    code, out, _ = run(capsys, "tomo", "pauli", "--n-qubits", "1", "--eps", "0.3", "--delta", "0.1", "--seed", "1")
    rep = json.loads(out)
    assert code == 0 and set(rep) >= {"estimate", "trace_error", "copies_used", "params"}
    assert rep["estimate"]["d"] == 2
    code, out, _ = run(capsys, "tomo", "pauli", "--n-qubits", "1", "--eps", "0.3", "--delta", "0.1", "--seed", "1",
                       "--project")
    assert code == 0 and json.loads(out)["params"]["project"] is True
    code, out, _ = run(capsys, "tomo", "mub", "--dim", "4", "--copies", "5000", "--seed", "2")
    assert code == 0 and json.loads(out)["copies_used"] == 5000
    code, out, _ = run(capsys, "tomo", "k-outcome", "--dim", "4", "--k", "2", "--copies", "20000", "--seed", "2")
    assert code == 0 and "bottoms_per_basis" in json.loads(out)["counters"]


def test_tomo_trials_csv(capsys, tmp_path):
    out_path = tmp_path / "t.csv"
    code, _, _ = run(capsys, "tomo", "mub", "--dim", "2", "--copies", "600", "--seed", "2", "--trials", "4",
                     "--output", str(out_path))
    assert code == 0 and len(out_path.read_text().splitlines()) == 5


def test_tomo_validation_exit(capsys):
    code, _, err = run(capsys, "tomo", "pauli", "--n-qubits", "1", "--eps", "0.3", "--delta", "0.5", "--seed", "1")
    assert code == 2 and "delta" in err
    code, _, _ = run(capsys, "tomo", "mub", "--dim", "3", "--copies", "100", "--seed", "1")
    assert code == 2


def test_sweep_flags_and_config(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--estimator", "pauli", "--dims", "1", "--eps", "0.3", "--trials", "2")
    assert code == 2 and "seed" in err
    code, out, _ = run(capsys, "sweep", "--estimator", "pauli", "--dims", "1", "--eps", "0.3", "--trials", "2",
                       "--seed", "5", "--copies", "30", "60")
    assert code == 0 and len(out.strip().splitlines()) == 5
    cfg = tmp_path / "c.toml"
    csv_path = tmp_path / "o.csv"
    cfg.write_text(f'estimator = "pauli"\ntrials = 2\noutput = "{csv_path}"\n[sweep]\ndims = [1]\neps = [0.3]\n')
    code, _, _ = run(capsys, "sweep", "--config", str(cfg), "--seed", "9", "--summary", str(tmp_path / "s.json"),
                     "--plot-dir", str(tmp_path / "plots"))
    assert code == 0 and len(csv_path.read_text().splitlines()) == 3
    assert (tmp_path / "s.json").exists() and list((tmp_path / "plots").iterdir())


def test_sweep_state_flags(capsys):
    code, out, _ = run(capsys, "sweep", "--estimator", "mub", "--dims", "2", "--eps", "0.3", "--trials", "1",
                       "--seed", "5", "--copies", "600", "--state-kind", "maximally-mixed")
    assert code == 0


def test_numerical_error_exit(capsys, monkeypatch):
    from mictomo.errors import NumericalError

    def boom(args):
        raise NumericalError("forced")

    monkeypatch.setattr(cli, "cmd_lowerbound", boom)
    code, _, err = run(capsys, "lowerbound", "pauli", "--n-qubits", "2", "--eps", "0.1")
    assert code == 3 and "forced" in err
