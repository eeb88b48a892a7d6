import json
from pathlib import Path

import numpy as np
import pytest

from belljump.cli import main
from belljump.modelio import model_to_dict
from belljump.models import two_level

GOLDEN = Path(__file__).parent / "golden"


def _schema(obj):
    if isinstance(obj, dict):
        return {k: _schema(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_schema(v) for v in obj[:1]]
    return type(obj).__name__


def _close(a, b):
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k]) for k in a)
    if isinstance(a, list):
        return len(a) == len(b) and all(_close(x, y) for x, y in zip(a, b))
    if isinstance(a, float):
        return abs(a - b) <= 1e-9 * max(1.0, abs(b))
    return a == b


def test_simulate_two_level(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--model", "two_level", "--t-end", "3.1415", "--n", "1000", "--seed", "7",
                 "--threads", "1", "--output", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["jumps"]["mean"] == pytest.approx(1.0, abs=0.01)
    lines = (out / "trajectories.jsonl").read_text().splitlines()
    assert len(lines) == 1000
    first = json.loads(lines[0])
    assert set(first) == {"index", "status", "events"} and first["index"] == 0
    header = (out / "checkpoints.csv").read_text().splitlines()[0]
    assert header == "t,label,empirical,expected"


def test_simulate_report_matches_golden(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--model", "two_level", "--n", "200", "--seed", "7", "--threads", "1",
                 "--output", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    golden = json.loads((GOLDEN / "two_level_report.json").read_text())
    assert _schema(report) == _schema(golden)
    assert _close(report, golden)


def test_validation_exit_codes(tmp_path, capsys):
    assert main(["simulate", "--model", str(tmp_path / "missing.json"), "--output", str(tmp_path)]) == 2
    assert main(["simulate", "--model", "two_level", "--n", "0", "--output", str(tmp_path)]) == 2
    assert main(["simulate", "--model", "two_level", "--t-end", "-1", "--output", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "--n" in err and "--t-end" in err


def test_verify_rejects_corrupted_povm(tmp_path, capsys):
    doc = model_to_dict(two_level())
    doc["povm"][0]["matrix"][0] = [0.5, 0.0]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["verify", "--model", str(path), "--n", "10"]) == 2
    assert "$.povm" in capsys.readouterr().err


def test_verify_two_level_passes(tmp_path, capsys):
    code = main(["verify", "--model", "two_level", "--n", "20000", "--threads", "1", "--output", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0, out
    assert out.strip().endswith("PASS")
    summary = json.loads((tmp_path / "verify.json").read_text())
    assert summary["passed"] and len(summary["checks"]) == 11


def test_check_subcommand(tmp_path, capsys):
    assert main(["check", "--model", "two_level"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["a2_integral"] == pytest.approx(2.0, abs=1e-9)
    assert rep["hs_bound_ok"] and rep["worst_ratio"] <= 1
    doc = model_to_dict(two_level())
    doc["hamiltonian"] = [[0, 0]] * 4
    zero = tmp_path / "zero.json"
    zero.write_text(json.dumps(doc))
    assert main(["check", "--model", str(zero)]) == 0
    capsys.readouterr()
    doc["hamiltonian"][1] = [0.0, 1.0]
    bad = tmp_path / "nonherm.json"
    bad.write_text(json.dumps(doc))
    assert main(["check", "--model", str(bad)]) == 2


def test_oracle_csv(tmp_path):
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--model", "two_level", "--t-end", "3.0", "--grid-step", "0.1",
                 "--method", "both", "--output", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "t,label,weight,method"
    body = [r.split(",") for r in rows[1:]]
    assert {r[3] for r in body} == {"MASTER_ODE", "PICARD"}
    for t, lab, w, method in body:
        if method == "MASTER_ODE":
            ref = np.cos(float(t) / 2) ** 2 if lab == "0" else np.sin(float(t) / 2) ** 2
            assert float(w) == pytest.approx(ref, abs=1e-7)


def test_rates_dump(capsys):
    assert main(["rates", "dump", "--model", "two_level", "--t", str(np.pi / 2)]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "from,to,rate"
    table = {(a, b): c for a, b, c in (r.split(",") for r in rows[1:])}
    assert float(table[("0", "1")]) == pytest.approx(1.0, abs=1e-12)
    assert main(["rates", "dump", "--model", "two_level", "--t", "0"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert "1,0,inf" in rows


def test_model_list_and_export(tmp_path, capsys):
    assert main(["model", "list"]) == 0
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert names == ["two_level", "bell_lattice", "random_hermitian", "compressed_povm"]
    path = tmp_path / "m.json"
    assert main(["model", "export", "bell_lattice", "--output", str(path)]) == 0
    doc = json.loads(path.read_text())
    assert doc["dim"] == 10 and len(doc["povm"]) == 10
    assert main(["simulate", "--model", str(path), "--n", "50", "--threads", "1",
                 "--output", str(tmp_path / "o")]) == 0


def test_outputs_identical_across_threads(tmp_path):
    runs = []
    for threads in ("1", "2"):
        out = tmp_path / f"t{threads}"
        assert main(["simulate", "--model", "random_hermitian", "--n", "9000", "--seed", "5",
                     "--threads", threads, "--output", str(out)]) == 0
        runs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert runs[0] == runs[1]


def test_threads_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("BELLJUMP_THREADS", "0")
    assert main(["simulate", "--model", "two_level", "--n", "5", "--output", str(tmp_path)]) == 2
