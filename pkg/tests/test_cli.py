import csv
import json

import pytest

from rmtfluct import cli

SMALL = {"seed": 5, "cases": [
    {"id": "w", "mode": "formula", "prediction": {"formula": "3.4c", "N": 4, "l": 9}, "reference": 4.0},
    {"id": "gauss_x", "mode": "mc", "spec": {"family": "Gaussian_beta", "N": 20},
     "f": {"kind": "poly", "coeffs": [0, 1]}, "n_samples": 400, "target": 0.25},
    {"id": "oracle", "mode": "oracle", "spec": {"family": "CUE", "N": 2},
     "f": {"kind": "cos", "m": 1}, "reference": 0.5},
]}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_verify_exit_zero_and_outputs(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["verify", "--config", write(tmp_path, SMALL), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert [r["id"] for r in rep["results"]] == ["w", "gauss_x", "oracle"]
    assert rep["seed_manifest"]["seed"] == 5 and "numpy" in rep["versions"]
    assert capsys.readouterr().out.count("PASS") == 3
    raw = (tmp_path / "r.csv").read_bytes()
    assert raw.count(b"\r\n") == 4
    rows = list(csv.DictReader(raw.decode().splitlines()))
    assert rows[0]["predicted"] == "4" and len(rows) == 3


def test_verify_failure_exit_one(tmp_path):
    bad = {"cases": [{"id": "w", "mode": "formula", "prediction": {"formula": "3.4c", "N": 4, "l": 9},
                      "reference": 5.0}]}
    out = tmp_path / "r.json"
    assert cli.main(["verify", "--config", write(tmp_path, bad), "--out", str(out)]) == 1
    rep = json.loads(out.read_text())
    assert rep["results"][0]["diagnostics"]["failure"] == "outside tolerance"


@pytest.mark.parametrize("cfg", [{"cases": []}, {"cases": [{"mode": "formula"}]},
                                 {"cases": [{"id": "a", "mode": "nope"}]},
                                 {"cases": [{"id": "a", "mode": "formula", "prediction": {"formula": "zz"},
                                             "reference": 1}]}])
def test_malformed_config_exit_two(tmp_path, cfg):
    assert cli.main(["verify", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "r.json")]) == 2


def test_usage_errors(tmp_path):
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["verify"]) == 2
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert cli.main(["predict", "--config", str(p)]) == 2


def test_predict_z5_equals_b2(tmp_path):
    out = tmp_path / "p.json"
    assert cli.main(["predict", "--config", write(tmp_path, {"formula": "z.5", "beta": 2}),
                     "--out", str(out)]) == 0
    b2 = cli.predict_one({"formula": "3.4dB3"}).value
    assert abs(json.loads(out.read_text())["value"] - b2) < 1e-12


def test_predict_is_pure():
    d = {"formula": "3.4e", "ensemble": "CUE", "f": {"kind": "cos", "m": 2}}
    assert cli.predict_one(d).to_json() == cli.predict_one(d).to_json()


def test_figure_fig1(tmp_path):
    out = tmp_path / "f1.csv"
    assert cli.main(["figure", "fig1", "--seed", "3", "--out", str(out)]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["N", "sum_cos"] and len(rows) == 151
    assert [int(r[0]) for r in rows[1:]] == list(range(1, 151))
    # N = 1: cos 2x of one uniform angle
    assert -1 <= float(rows[1][1]) <= 1


def test_figure_fig2_small(tmp_path):
    cfg = {"N": 100, "sides": [2, 4], "n_samples": 3, "rotations": 2}
    out = tmp_path / "f2.csv"
    assert cli.main(["figure", "fig2", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["L", "mean", "variance", "se"] and len(rows) == 3


def test_seventeen_digits():
    assert cli._g(0.1) == "0.10000000000000001"
    assert float(cli._g(1 / 3)) == 1 / 3
    assert cli._g(None) == ""


def test_sample_command(tmp_path):
    out = tmp_path / "s.csv"
    cfg = {"spec": {"family": "CUE", "N": 6}, "stream": 2}
    assert cli.main(["sample", "--config", write(tmp_path, cfg), "--seed", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 7


def test_oracle_command(tmp_path):
    out = tmp_path / "o.json"
    cfg = {"spec": {"family": "Gaussian_beta", "N": 2, "beta": 2}, "f": {"kind": "poly", "coeffs": [0, 1]}}
    assert cli.main(["oracle", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    assert abs(json.loads(out.read_text())["value"] - 0.25) < 1e-8


def test_threads_identical_numeric_fields():
    a = cli.verify(SMALL, threads=1)
    b = cli.verify(SMALL, threads=8)
    fa, fb = cli.numeric_fields(a["results"]), cli.numeric_fields(b["results"])
    assert fa == fb and len(fa) > 20


def test_determinism_case():
    cfg = {"cases": SMALL["cases"] + [{"id": "det", "mode": "determinism", "threads": [1, 3]}]}
    rep = cli.verify(cfg)
    det = rep["results"][-1]
    assert det["passed"] and det["diagnostics"]["mismatches"] == []


def test_default_suite_shape():
    suite = cli.default_suite()
    ids = [c["id"] for c in suite["cases"]]
    assert ids == [f"criterion_{i}" for i in range(1, 16)]
    small = cli.scaled_cases(suite["cases"], 0.01)
    assert all(c.get("n_samples", 100) >= 1 for c in small)
