import csv
import io
import json
import subprocess
import sys

import pytest

from graphfield.cli import parse_count, run

WEIGHT = ["weight", "--graph", "3;4;1>2,1>3,2>1,2>3", "--propagator", "kontsevich",
          "--space", "Cn0", "--samples", "2e4", "--seed", "3"]


def call(argv):
    buf = io.StringIO()
    code = run(argv, buf)
    return code, buf.getvalue()


def call_json(argv):
    code, text = call(argv)
    return code, json.loads(text)


def test_sample_counts():
    assert parse_count("1e6") == 10 ** 6
    assert parse_count("2.5e3") == 2500
    assert parse_count(300) == 300
    for bad in ("0", "-5", "1.5", "lots"):
        with pytest.raises(Exception):
            parse_count(bad)


def test_ddcheck_passes():
    code, doc = call_json(["operad-ddcheck", "--max-arity", "4"])
    assert code == 0
    assert doc["d_squared_zero"] and doc["quotient_in_ideal"]


def test_usage_errors_exit_2():
    assert call(["bogus"])[0] == 2
    assert call([])[0] == 2
    assert call(["weight", "--graph", "3;4;1>9"])[0] == 2
    assert call(["schouten", "--field", "x1*psi1"])[0] == 2
    assert call(["zeta", "--n", "1"])[0] == 2
    assert call(["weight", "--graph", "2;1;1>2", "--propagator", "nope"])[0] == 2


def test_missing_table_entries_are_usage_errors(tmp_path):
    table = tmp_path / "t.json"
    table.write_text(json.dumps([{"graph": "2;1;1>2", "value": 1}]))
    code, doc = call_json(["mu", "--table-file", str(table), "--field", "psi1*psi2",
                           "--field", "x1*x2", "--field", "x1"])
    assert code == 2 and "missing" in doc["error"]
    table.write_text(json.dumps({"default": 0, "rows": [{"graph": "2;1;1>2", "value": 1}]}))
    code, doc = call_json(["mu", "--table-file", str(table), "--field", "psi1*psi2",
                           "--field", "x1*x2"])
    assert code == 0 and doc["result"] == "x2*psi2 - x1*psi1"


def test_singular_propagators_need_a_flag():
    argv = ["weight", "--graph", "3;4;1>2,1>3,2>1,2>3", "--propagator", "half_k_anti",
            "--space", "Cn0", "--samples", "1e3"]
    assert call(argv)[0] == 2
    assert call(argv + ["--experimental-singular"])[0] == 0


def test_weight_records_its_run_parameters():
    code, doc = call_json(WEIGHT)
    assert code == 0
    for key in ("samples", "shards", "seed", "value_re", "value_im", "std_error"):
        assert key in doc
    assert doc["samples"] == 20000 and doc["seed"] == 3


def test_reruns_are_byte_identical():
    assert call(WEIGHT) == call(WEIGHT)
    argv = WEIGHT + ["--shards", "4", "--workers", "2"]
    assert call(argv) == call(argv[:-2])


def test_seed_from_environment(monkeypatch):
    argv = WEIGHT[:-2]
    monkeypatch.setenv("GRAPHFIELD_SEED", "11")
    _, doc = call_json(argv)
    assert doc["seed"] == 11


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"samples": "1e3", "seed": 5, "max-arity": 3}))
    _, doc = call_json(WEIGHT[:-4] + ["--config", str(cfg)])
    assert doc["samples"] == 1000 and doc["seed"] == 5
    _, doc = call_json(WEIGHT[:-4] + ["--config", str(cfg), "--seed", "9"])
    assert doc["samples"] == 1000 and doc["seed"] == 9
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert call(WEIGHT + ["--config", str(bad)])[0] == 2


def test_csv_is_a_flat_projection():
    code, text = call(["graphs", "--n", "2", "--l", "2", "--unlabeled", "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(text)))
    _, doc = call_json(["graphs", "--n", "2", "--l", "2", "--unlabeled"])
    assert code == 0
    assert [r["graph"] for r in rows] == [r["graph"] for r in doc["rows"]]
    assert all(r["count"] == str(doc["count"]) for r in rows)


def test_text_format_shows_the_error_bar():
    code, text = call(WEIGHT + ["--format", "text"])
    assert code == 0
    line = next(ln for ln in text.splitlines() if ln.startswith("value:"))
    assert "+/-" in line and "seed 3" in line and "shards 1" in line


def test_algebra_commands():
    _, doc = call_json(["schouten", "--field", "psi1", "--field", "x1^2"])
    assert doc["result"] == "2*x1"
    _, doc = call_json(["phi", "--graph", "2;1;1>2", "--field", "psi1", "--field", "x1^2"])
    assert doc["result"] == "2*x1"
    code, doc = call_json(["transform", "-d", "3", "--field", "x3*psi1*psi2", "--table", "zero",
                           "--order", "2", "--check"])
    assert code == 0 and doc["maurer_cartan"]
    code, doc = call_json(["transform", "-d", "3", "--field", "x3*psi1*psi2 + x1*psi1*psi3",
                           "--table", "zero", "--check"])
    assert code == 1 and not doc["maurer_cartan"]


def test_duflo_and_flow():
    code, doc = call_json(["duflo", "--algebra", "so3", "--order", "4"])
    assert code == 0 and doc["routes_agree"]
    assert doc["exponent"]["2"] == "1/48"
    code, doc = call_json(["flow", "--algebra", "so3", "--check"])
    assert code == 0 and doc["second_term"] == "0" and doc["tangent"]


def test_zeta_command():
    code, doc = call_json(["zeta", "--n", "2", "--samples", "1e5", "--seed", "1"])
    assert code == 0
    assert abs(doc["value_re"] - 1.6449340668) < 5 * doc["std_error"] + 1e-3


def test_verify_stokes_command():
    code, doc = call_json(["verify-stokes", "--max-n", "3"])
    assert code == 0 and doc["passed"]


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "graphfield.cli", "operad-ddcheck", "--max-arity", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"]
