import csv
import hashlib
import json

import pytest

from priorinet import solver as solver_mod
from priorinet.cli import main
from priorinet.petri import bundled_net, net_to_dict
from priorinet.solver import InconsistencyError


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def adversarial(tmp_path):
    doc = {
        "format": "priorinet/plds",
        "version": 1,
        "n": 1,
        "delays": ["1"],
        "labels": ["x"],
        "actions": [{"coord": 0, "id": "a", "offset": "0", "coeffs": [{"delay": "1", "row": ["2"]}]}],
    }
    return _write(tmp_path / "adv.json", doc)


@pytest.fixture
def cyclic(tmp_path):
    doc = net_to_dict(bundled_net("crossing"))
    doc["priority"].append({"place": "p_north", "order": ["ze", "zn"]})
    return _write(tmp_path / "cyc.json", doc)


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_validate_exit_codes(tmp_path, cyclic):
    assert main(["validate", "pfau", "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "violations.json").read_text())["valid"] is True
    assert main(["validate", cyclic, "--out", str(tmp_path / "b")]) == 2
    assert json.loads((tmp_path / "b" / "violations.json").read_text())["violations"]


def test_malformed_input_is_exit_4(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{bad")
    assert main(["validate", str(bad)]) == 4
    assert main(["solve", str(tmp_path / "missing.json")]) == 4
    assert main(["solve", "pfau", "--bogus"]) == 4


def test_compile_reduced_and_full(tmp_path):
    assert main(["compile", "pfau", "--out", str(tmp_path / "r")]) == 0
    assert json.loads((tmp_path / "r" / "plds.json").read_text())["n"] == 4
    rep = json.loads((tmp_path / "r" / "compile_report.json").read_text())
    assert rep["eliminated"]
    assert main(["compile", "pfau", "--no-reduce", "--out", str(tmp_path / "f")]) == 0
    assert json.loads((tmp_path / "f" / "plds.json").read_text())["n"] > 4


def test_compiled_plds_round_trips_through_solve(tmp_path):
    main(["compile", "crossing", "--out", str(tmp_path / "c")])
    assert main(["solve", str(tmp_path / "c" / "plds.json"), "--out", str(tmp_path / "s")]) == 0
    assert main(["solve", "crossing", "--out", str(tmp_path / "t")]) == 0
    a = json.loads((tmp_path / "s" / "solution.json").read_text())
    b = json.loads((tmp_path / "t" / "solution.json").read_text())
    assert a["rho"] == b["rho"] and a["u"] == b["u"]


def test_assumptions(tmp_path, adversarial):
    assert main(["assumptions", "pfau", "--out", str(tmp_path / "p")]) == 0
    doc = json.loads((tmp_path / "p" / "assumptions.json").read_text())
    assert doc["verdict"] == "pass"
    assert main(["assumptions", adversarial, "--out", str(tmp_path / "x")]) == 2
    assert main(["solve", adversarial]) == 2
    assert main(["assumptions", "pfau", "--format", "csv", "--out", str(tmp_path / "c")]) == 0
    rows = list(csv.reader(open(tmp_path / "c" / "assumptions.csv")))
    assert rows[0][:5] == ["policy", "A1", "A2", "B1", "B2"] and len(rows) > 1


def test_solve_csv(tmp_path):
    assert main(["solve", "pfau", "--format", "csv", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "solution.csv")))
    assert rows[0] == ["coordinate", "rho", "u"]
    assert rows[-1][0] == "policy"


def test_simulate(tmp_path):
    assert main(["simulate", "pfau", "--horizon", "40", "--exact", "--exact-sidecar", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    # zero history only approaches rho geometrically
    assert float(summary["throughput_error_vs_rho"]) < 1e-9
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x_1,x_2,x_3,x_4"
    assert (tmp_path / "trajectory.csv.exact.csv").exists()
    assert "trajectory.csv" in _manifest(tmp_path)["outputs"]


def test_simulate_halfline_history(tmp_path):
    assert main(["simulate", "pfau", "--horizon", "10", "--exact", "--history", "halfline", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["halfline_residual_tail"] == "0"


def test_sweep_csv(tmp_path):
    code = main(["sweep", "pfau", "--vary", "N_A=1/2:1:1/2", "--vary", "N_P=1,2", "--out", str(tmp_path)])
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "sweep.csv")))
    assert rows[0] == ["N_A", "N_P", "rho_1", "rho_2", "rho_3", "rho_4", "t1", "policy", "status"]
    assert [r[:2] for r in rows[1:]] == [["1/2", "1"], ["1/2", "2"], ["1", "1"], ["1", "2"]]
    assert all(r[-1] == "ok" for r in rows[1:])


def test_sweep_rejects_structural_parameter(tmp_path):
    assert main(["sweep", "pfau", "--vary", "nonexistent=1:2:1"]) == 4
    assert main(["sweep", "pfau"]) == 4


def test_manifest_and_reproducibility(tmp_path):
    argv = ["sweep", "pfau", "--vary", "N_A=1/2:1:1/4", "--seed", "7"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(["--out", str(tmp_path / "b"), *argv]) == 0
    m = _manifest(tmp_path / "a")
    assert m["command"] == "sweep" and m["seed"] == 7 and m["exit_code"] == 0
    assert m["input_kind"] == "net" and m["outputs"] == ["sweep.csv"]
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    mb = _manifest(tmp_path / "b")
    m.pop("timestamp"), mb.pop("timestamp")
    assert m == mb


def test_manifest_digest_of_file(tmp_path, cyclic):
    main(["validate", cyclic, "--out", str(tmp_path / "o")])
    raw = open(cyclic, "rb").read()
    assert _manifest(tmp_path / "o")["input_sha256"] == hashlib.sha256(raw).hexdigest()


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PRIORINET_THREADS", "2")
    assert main(["sweep", "pfau", "--vary", "N_A=1,2", "--out", str(tmp_path)]) == 0
    assert _manifest(tmp_path)["threads"] == 2
    monkeypatch.setenv("PRIORINET_THREADS", "many")
    assert main(["solve", "pfau"]) == 4


def test_inconsistency_exit_code(monkeypatch):
    def boom(*a, **k):
        raise InconsistencyError("forced", [])

    monkeypatch.setattr(solver_mod, "solve_halfline", boom)
    assert main(["solve", "pfau"]) == 5


def test_stdout_without_out(capsys):
    assert main(["solve", "pfau"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["policy"]
