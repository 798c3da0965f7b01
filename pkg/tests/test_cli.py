import csv
import json
import math
from importlib import resources

import pytest

from decomplab.cli import main
from decomplab.config import parse_config

CFG_A = str(resources.files("decomplab.configs").joinpath("cfg_a.json"))
CFG_B = str(resources.files("decomplab.configs").joinpath("cfg_b.json"))


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def _cfg(**changes):
    data = json.loads(open(CFG_A).read())
    data.update(changes)
    return data


def test_validate(capsys):
    assert main(["validate", "--config", CFG_A]) == 0
    out = capsys.readouterr().out
    assert "BothPositive" in out


def test_invalid_configs_exit_2(tmp_path, capsys):
    assert main(["validate", "--config", _write(tmp_path, "{not json")]) == 2
    assert main(["validate", "--config", _write(tmp_path, _cfg(extra=1))]) == 2
    # infinite rate with a negative company 1 drift has no survival
    bad = _cfg(risk={"r1": "inf", "r2": 0.0})
    bad["company1"] = {"drift": 0.8, "rate": 2.0, "jumps": {"law": "exponential", "rate": 2.0}}
    assert main(["validate", "--config", _write(tmp_path, bad)]) == 2
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_verify_queue_with_unstable_rates_exit_2(tmp_path):
    path = _write(tmp_path, _cfg(queue={"rho1": 2.0, "rho2": 0.6}))
    assert main(["verify", "--config", path, "--suite", "thm2_queue", "--out", str(tmp_path)]) == 2


def test_unknown_rate_rejected_by_parser():
    with pytest.raises(SystemExit):
        main(["analyze", "--config", CFG_A, "--what", "F1", "--rates", "x", "1"])


def test_analyze_F1_and_G1(tmp_path):
    assert main(["analyze", "--config", CFG_A, "--what", "F1", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "F1.csv")
    assert [float(r["s"]) for r in rows] == [0.25, 0.5, 1.0, 2.0, 4.0]
    assert all(0 < float(r["F1_hat"]) <= 1 for r in rows)
    assert main(["analyze", "--config", CFG_A, "--what", "G1", "--out", str(tmp_path)]) == 0
    assert len(_rows(tmp_path / "G1.csv")) == 5


def test_analyze_factorize(tmp_path):
    assert main(["analyze", "--config", CFG_A, "--what", "factorize", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "factorize.csv")
    assert len(rows) == 15
    assert max(float(r["identity_residual"]) for r in rows) < 1e-6


def test_analyze_invert_closed_form(tmp_path):
    args = ["analyze", "--config", CFG_A, "--what", "invert-U", "--rates", "inf", "0", "--out", str(tmp_path)]
    assert main(args) == 0
    rows = _rows(tmp_path / "U_cdf.csv")
    err = max(abs(float(r["cdf"]) - (1 - 0.5 * math.exp(-0.5 * float(r["u"])))) for r in rows)
    assert err < 1e-4
    side = json.loads((tmp_path / "U_cdf.json").read_text())
    assert side["config"]["risk"] == {"r1": "inf", "r2": 0.0}
    assert side["atom"] == pytest.approx(0.5, abs=1e-4)


def test_sidecar_reparses(tmp_path):
    main(["analyze", "--config", CFG_B, "--what", "F1", "--out", str(tmp_path)])
    side = json.loads((tmp_path / "F1.json").read_text())
    assert side["command"] == "analyze F1"
    cfg = parse_config(side["config"])
    assert cfg.risk.spec1.drift == 0.8
    # CFG-B company 1 has Phi(0) = 0.5, so s = 0.25 is not tabulated
    assert [float(r["s"]) for r in _rows(tmp_path / "F1.csv")] == [0.5, 1.0, 2.0, 4.0]


def test_simulate_risk_independent_of_jobs(tmp_path):
    outs = []
    for jobs in (1, 2):
        d = tmp_path / f"j{jobs}"
        args = ["simulate-risk", "--config", CFG_A, "--N", "300", "--jobs", str(jobs), "--out", str(d)]
        assert main(args) == 0
        outs.append(((d / "U_sample.csv").read_bytes(), (d / "U_sample.json").read_bytes()))
    assert outs[0] == outs[1]
    rows = _rows(tmp_path / "j1" / "U_sample.csv")
    assert len(rows) == 300 and all(float(r["U"]) >= 0 for r in rows)


def test_simulate_queue(tmp_path):
    path = _write(tmp_path, _cfg(simulation={"queue_total_time": 20000, "queue_replicas": 4}))
    assert main(["simulate-queue", "--config", path, "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "V_transform.csv")
    assert len(rows) == 5
    side = json.loads((tmp_path / "V_transform.json").read_text())
    assert side["T"] == 5000 and side["replicas"] == 4


def test_verify_writes_report(tmp_path):
    path = _write(tmp_path, _cfg(simulation={"N": 500}))
    assert main(["verify", "--config", path, "--suite", "wh_identity,thm1_main", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "verify_report.json").read_text())
    assert doc["pass"] and [r["identity"] for r in doc["reports"]] == ["wh_identity", "thm1_main"]


def test_bad_jobs():
    assert main(["simulate-risk", "--config", CFG_A, "--jobs", "0"]) == 2
