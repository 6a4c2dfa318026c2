import csv
import io
import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from postedprice.cli import main, parse_ints, parse_overrides, parse_range
from postedprice.evaluation import eval_mechanism
from postedprice.harness import ExperimentSpec, emit_ratio_table, gap_search, rows_to_csv, rows_to_json, run
from postedprice.serialize import instance_from_dict, mechanism_from_dict


def test_parsers():
    assert parse_ints("1..3") == (1, 2, 3)
    assert parse_ints("0,4,2") == (0, 4, 2)
    assert parse_ints(5) == (5,)
    assert parse_ints([1, 2]) == (1, 2)
    with pytest.raises(ValueError):
        parse_ints("3..1")
    assert parse_range("2..9") == (2, 9)
    with pytest.raises(ValueError):
        parse_range("5")
    assert parse_overrides(["tau_g=1/90", "segment_budget = 3"]) == {"tau_g": "1/90", "segment_budget": "3"}
    with pytest.raises(ValueError):
        parse_overrides(["oops"])


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentSpec("nope").validate()
    with pytest.raises(ValueError):
        ExperimentSpec("lp", seeds=(1, 1)).validate()
    with pytest.raises(ValueError):
        ExperimentSpec("eval").validate()
    with pytest.raises(FileNotFoundError):
        ExperimentSpec("lp", instance=str(tmp_path / "missing.json")).validate()


def test_rows_sorted_and_deterministic():
    spec = ExperimentSpec("lp", n=5, ks=(3, 1, 2), seeds=(4, 0, 2))
    rows = run(spec)
    assert [(r["K"], r["seed"]) for r in rows] == sorted((k, s) for k in (1, 2, 3) for s in (0, 2, 4))
    assert rows_to_csv(rows) == rows_to_csv(run(spec))
    assert "wall_time" not in rows_to_csv(rows)
    timed = run(ExperimentSpec("lp", n=5, ks=(1,), seeds=(0,), timing=True))
    assert "wall_time" in rows_to_csv(timed).splitlines()[0]


def test_json_mechanisms_recheck():
    spec = ExperimentSpec("oracle-aspm", n=4, ks=(2,), seeds=(0, 1, 2))
    for row in json.loads(rows_to_json(run(spec))):
        inst = instance_from_dict(row["instance"])
        mech = mechanism_from_dict(row["mechanism"])
        assert eval_mechanism(inst, mech) == F(row["value"])
        assert F(row["value"]) <= F(row["lp_objective"])


def test_budget_rows_continue():
    rows = run(ExperimentSpec("oracle-spm", n=8, ks=(2,), seeds=(0, 1), budget=10))
    assert [r["status"] for r in rows] == ["budget", "budget"]
    assert "error" in json.loads(rows[0]["extra"])


def test_big_only_generation():
    rows = run(ExperimentSpec("ptas-spm", n=3, ks=(1,), seeds=(0,), max_support=2, big_only=True,
                              overrides={"segment_budget": "3", "tau_g": "1/90"}))
    assert rows[0]["status"] == "ok"
    assert json.loads(rows[0]["extra"])["params"]["segment_budget"] == 3


def test_ratio_table_columns():
    table = emit_ratio_table((1, 2), range(3), n=6, max_support=3)
    assert [r["K"] for r in table] == [1, 2]
    for r in table:
        assert float(r["min_ratio"]) >= float(r["bound"]) - 1e-9


def test_gap_search_records(tmp_path):
    best, rows = gap_search(range(5), copies=2, n_range=(2, 4), fixture=tmp_path / "g.json", threshold=1)
    assert len(rows) == 5 and best["gap_exact"] >= 1
    saved = json.loads((tmp_path / "g.json").read_text())
    assert saved["seed"] == best["seed"]


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["lp", "--k", "1", "--seeds", "0..1", "--n", "4"]) == 0
    out = capsys.readouterr().out
    assert list(csv.DictReader(io.StringIO(out)))[0]["algorithm"] == "lp"
    assert main(["oracle", "--kind", "spm", "--k", "2", "--n", "8", "--budget", "5"]) == 2
    assert main(["eval", "--instance", str(tmp_path / "none.json"), "--mechanism", "x"]) == 1
    assert main(["ptas-spm", "--k", "1", "--n", "3", "--override", "junk=1"]) == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"k": "2", "seeds": "0..2", "n": 5, "format": "json"}))
    assert main(["lp", "--config", str(cfg)]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 3 and all(r["K"] == 2 for r in rows)
    # command-line flags win over the file
    assert main(["lp", "--config", str(cfg), "--n", "3", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert all(r["n"] == "3" for r in rows)


def test_cli_gen_eval_round_trip(tmp_path, capsys):
    inst = tmp_path / "i.json"
    assert main(["gen", "--k", "2", "--seed", "5", "--n", "4", "--out", str(inst)]) == 0
    assert main(["oracle", "--kind", "aspm", "--instance", str(inst), "--format", "json",
                 "--out", str(tmp_path / "o.json")]) == 0
    row = json.loads((tmp_path / "o.json").read_text())[0]
    mech = tmp_path / "m.json"
    mech.write_text(json.dumps(row["mechanism"]))
    assert main(["eval", "--instance", str(inst), "--mechanism", str(mech), "--trials", "5000",
                 "--format", "json"]) == 0
    ev = json.loads(capsys.readouterr().out)[0]
    assert ev["value"] == row["value"]
    assert abs(float(ev["extra"]["mc_mean"]) - float(ev["value_float"])) <= 4 * float(ev["extra"]["mc_se"])


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "postedprice.cli", "lp", "--k", "1", "--seeds", "0", "--n", "3"],
                         capture_output=True, text=True, check=True).stdout
    assert out.startswith("algorithm,K,seed")
