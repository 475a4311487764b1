import csv
import json
import os

import pytest
from anisoscale import cli

# Logging
import logging
logging.basicConfig(level=logging.DEBUG)

LOPSIDED = ["--q", "1.8", "3", "6"]
UNIT = ["--gamma", "1", "1", "1"]
BOUNDARY = ["--q", "2", str(8 / 3), str(8 / 3)]


def output(capsys):
    return json.loads(capsys.readouterr().out)


def test_classify(capsys):
    assert cli.main(["classify"] + LOPSIDED + UNIT) == cli.EXIT_OK
    document = output(capsys)
    assert document["family"] == "Y1"
    assert document["pi"] == [1, 2, 3]
    assert document["H"] == pytest.approx(1.6)
    assert len(document["config_hash"]) == 64

def test_classify_boundary():
    assert cli.main(["classify"] + BOUNDARY + UNIT) == cli.EXIT_BOUNDARY

def test_classify_invalid_q():
    assert cli.main(["classify", "--q", "1.2", "1.2", "1.2"] + UNIT) == cli.EXIT_INVALID

def test_classify_missing_gamma():
    assert cli.main(["classify"] + LOPSIDED) == cli.EXIT_USAGE

def test_bad_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("[1, 2")
    assert cli.main(["classify", "--config", str(path)]) == cli.EXIT_USAGE
    assert cli.main(["classify", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_USAGE

def test_config_file_with_overrides(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"q1": 2.7, "q2": 2.7, "q3": 2.7}, "gamma": [1, 1, 1]}))
    assert cli.main(["classify", "--config", str(path)]) == cli.EXIT_OK
    assert output(capsys)["family"] == "Y0"
    assert cli.main(["classify", "--config", str(path), "--gamma", "1", "1", "2"]) == cli.EXIT_OK
    assert output(capsys)["family"] == "Y12"

def test_exponents(capsys):
    assert cli.main(["exponents"] + LOPSIDED + UNIT) == cli.EXIT_OK
    document = output(capsys)
    assert document["region"] == "I"
    assert document["families"]["Y1"]["exists"]
    assert not document["families"]["Y3"]["exists"]

def test_simulate(tmp_path, capsys):
    out = str(tmp_path / "sim")
    code = cli.main(["simulate", "--extents", "3", "4", "5", "--radius", "2", "--skip-tail-check", "--seed", "4",
                     "--out", out] + LOPSIDED)
    assert code == cli.EXIT_OK
    document = output(capsys)
    assert document["extents"] == [3, 4, 5]
    assert document["seed"] == 4
    assert os.path.getsize(os.path.join(out, "window.bin")) == 3 * 4 * 5 * 8
    assert os.path.exists(os.path.join(out, "window.json"))
    assert os.path.exists(os.path.join(out, "simulate.json"))

def test_simulate_short_radius():
    code = cli.main(["simulate", "--extents", "2", "2", "2", "--radius", "2"] + LOPSIDED)
    assert code == cli.EXIT_NUMERICAL

def test_variance(tmp_path, capsys):
    out = str(tmp_path / "var")
    code = cli.main(["variance", "--lambda", "2", "4", "--corner", "1", "1", "1", "--out", out] + LOPSIDED + UNIT)
    assert code == cli.EXIT_OK
    document = output(capsys)
    assert [row["lambda"] for row in document["rows"]] == [2.0, 4.0]
    with open(os.path.join(out, "variance.csv")) as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 2
    assert rows[0]["x"] == "1.0 1.0 1.0"

def test_limit_cov(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"corners": [[1, 1, 1]], "quadrature": {"max_level": 6, "on_failure": "warn"}}))
    code = cli.main(["limit-cov", "--config", str(path)] + LOPSIDED + UNIT)
    assert code == cli.EXIT_OK
    document = output(capsys)
    assert document["family"] == "Y1"
    assert document["rows"][0]["value"] > 0

def test_verify_boundary(tmp_path, capsys):
    out = str(tmp_path / "verify")
    assert cli.main(["verify", "--out", out] + BOUNDARY + UNIT) == cli.EXIT_BOUNDARY
    document = output(capsys)
    assert document["rejection"]["kind"] == "boundary"
    with open(os.path.join(out, "summary.csv")) as handle:
        rows = list(csv.DictReader(handle))
    assert rows[0]["verdict"] == "rejected"

def test_verify_without_checks():
    assert cli.main(["verify"] + LOPSIDED + UNIT) == cli.EXIT_FAILED

def test_report_rerender(tmp_path, capsys):
    out = str(tmp_path / "verify")
    cli.main(["verify", "--out", out] + BOUNDARY + UNIT)
    capsys.readouterr()
    rerendered = str(tmp_path / "again")
    assert cli.main(["report", os.path.join(out, "report.json"), "--out", rerendered]) == cli.EXIT_OK
    assert output(capsys)["verdict"] == "rejected"
    with open(os.path.join(out, "summary.csv")) as first, open(os.path.join(rerendered, "summary.csv")) as second:
        assert first.read() == second.read()

def test_report_missing(tmp_path):
    assert cli.main(["report", str(tmp_path / "nothing.json")]) == cli.EXIT_USAGE

def test_variance_at_unit_scale(capsys):
    code = cli.main(["variance", "--lambda", "1", "--corner", "2", "2", "2"] + LOPSIDED + UNIT)
    assert code == cli.EXIT_OK
    row = output(capsys)["rows"][0]
    assert row["lambda"] == 1.0
    assert row["value"] > 0

@pytest.mark.parametrize("command, name", [
    (["simulate", "--extents", "6", "5", "4", "--radius", "3", "--skip-tail-check", "--seed", "2"] + LOPSIDED,
     "window.bin"),
    (["variance", "--lambda", "2", "4", "--corner", "1", "1", "1"] + LOPSIDED + UNIT, "variance.csv"),
    (["variance", "--lambda", "2", "--corner", "1", "1", "1"] + LOPSIDED + UNIT, "replicates.csv"),
])
def test_output_independent_of_threads(tmp_path, command, name):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"replicates": 50, "seed": 3}))
    outputs = []
    for count in (1, 2, 8):
        out = str(tmp_path / ("threads%d" % count))
        assert cli.main(command + ["--config", str(path), "--threads", str(count), "--out", out]) == cli.EXIT_OK
        with open(os.path.join(out, name), "rb") as handle:
            outputs.append(handle.read())
    assert outputs[0] == outputs[1] == outputs[2]
