import json

import pytest

from pubgood.cli import run
from pubgood.graphs import clique, cycle, format_cnf, CnfFormula, path, save_graph


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def k5(tmp_path):
    p = tmp_path / "k5.json"
    save_graph(clique(5), p)
    return p


def test_price_clique(capsys):
    code, out, _ = call(capsys, "price", "--setting", "clique", "--n", 10, "--dist", "uniform:0,1")
    assert code == 0
    assert json.loads(out)["price"] == pytest.approx(0.9 ** 10)


def test_price_other_settings(capsys):
    code, out, _ = call(capsys, "price", "--setting", "d_regular", "--d", 4, "--dist", "exp:1")
    assert code == 0 and json.loads(out)["threshold_T"] == pytest.approx(1.3862943611)
    code, out, _ = call(capsys, "price", "--setting", "uniform_general")
    assert code == 0 and json.loads(out)["price"] == 0.5
    code, _, err = call(capsys, "price", "--setting", "uniform_general", "--dist", "exp:1")
    assert code == 2 and err.startswith("pubgood: error[unsupported]")


def test_price_validation_errors(capsys):
    code, _, err = call(capsys, "price", "--setting", "clique", "--n", 1)
    assert code == 2 and "error[validation]" in err
    code, _, err = call(capsys, "price", "--setting", "clique")
    assert code == 1 and "--n" in err
    code, _, err = call(capsys, "price", "--setting", "clique", "--n", 3, "--dist", "normal:0,1")
    assert code == 1 and "error[parse]" in err


def test_usage_errors(capsys):
    assert call(capsys, "bogus")[0] == 1
    assert call(capsys, "price", "--setting", "clique", "--n", 3, "--unknown")[0] == 1
    assert call(capsys)[0] == 1


def test_missing_graph(capsys, tmp_path):
    code, _, err = call(capsys, "eq", "--graph", tmp_path / "missing.json", "--price", 0.3)
    assert code == 1 and err.startswith("pubgood: error[parse]")


def test_malformed_graph(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "edges": [[0, 0]]}')
    code, _, err = call(capsys, "eq", "--graph", bad, "--price", 0.3)
    assert code == 1 and "self-loop" in err


def test_gen_then_eq_then_sim(capsys, tmp_path):
    g = tmp_path / "g.json"
    assert call(capsys, "gen", "--kind", "cycle", "--n", 6, "--out", g)[0] == 0
    eq = tmp_path / "eq.json"
    code, _, _ = call(capsys, "eq", "--graph", g, "--price", 0.3, "--out", eq)
    assert code == 0
    doc = json.loads(eq.read_text())
    assert doc["verification"]["valid"]
    trials = tmp_path / "trials.csv"
    code, out, _ = call(capsys, "sim", "--graph", g, "--thresholds", eq, "--price", 0.3,
                        "--trials", 5000, "--seed", 7, "--workers", 1, "--csv", trials)
    assert code == 0
    res = json.loads(out)
    assert abs(res["mean_revenue"] - res["expected_revenue"]) <= 4 * res["stderr"]
    assert res["hipster_revenue_identical"]
    assert len(trials.read_text().splitlines()) == 5001


def test_eq_clique_has_myerson_annotation(capsys, k5):
    code, out, _ = call(capsys, "eq", "--graph", k5, "--price", 0.8 ** 5)
    assert code == 0
    assert "myerson_upper_bound" in json.loads(out)["annotations"]


def test_sim_threshold_count_mismatch(capsys, tmp_path, k5):
    t = tmp_path / "t.json"
    t.write_text("[0.5, 0.5]")
    code, _, err = call(capsys, "sim", "--graph", k5, "--thresholds", t, "--price", 0.2)
    assert code == 2 and "error[validation]" in err


def test_worstcase(capsys, tmp_path):
    g = tmp_path / "c5.json"
    save_graph(cycle(5), g)
    code, out, _ = call(capsys, "worstcase", "--graph", g, "--p", 0.5)
    assert code == 0
    assert json.loads(out)["min_sum_x"] == pytest.approx(5 / 3)
    code, out, _ = call(capsys, "worstcase", "--graph", g, "--p", 0.5, "--bounds")
    assert code == 0 and json.loads(out)["lower_bound"] == pytest.approx(5 / 12)


def test_sat_and_hardness(capsys, tmp_path):
    cnf = tmp_path / "one.cnf"
    cnf.write_text(format_cnf(CnfFormula(1, [(1, 1, 1)])))
    code, out, _ = call(capsys, "sat", "--cnf", cnf)
    assert code == 0 and json.loads(out)["n"] == 7
    code, out, _ = call(capsys, "hardness", "--cnf", cnf)
    assert code == 0 and json.loads(out)["min_sum_x"] == pytest.approx(3.0)


def test_seq_and_seq_clique(capsys, tmp_path):
    g = tmp_path / "p3.json"
    save_graph(path(3), g)
    o = tmp_path / "o.json"
    o.write_text("[1, 0, 2]")
    code, out, _ = call(capsys, "seq", "--graph", g, "--ordering", o, "--p", 0.5)
    assert code == 0
    res = json.loads(out)
    assert res["live_set"] == [0, 2] and res["revenue"] == pytest.approx(0.5)
    code, out, _ = call(capsys, "seq-clique", "--n", 2)
    assert code == 0 and json.loads(out)["revenue"] == pytest.approx(9 / 32)
    code, out, _ = call(capsys, "seq-clique", "--n", 2, "--commit", "--restarts", 2)
    assert code == 0 and json.loads(out)["revenue"] >= 9 / 32 - 1e-12


def test_repro_pentagon_gap(capsys, tmp_path):
    out_csv = tmp_path / "gap.csv"
    code, out, _ = call(capsys, "repro", "pentagon-gap", "--N", 100, "--p", 0.5,
                        "--format", "csv", "--out", out_csv)
    assert code == 0
    assert "PASS" in out and "FAIL" not in out
    rows = out_csv.read_text().splitlines()
    header = rows[0].split(",")
    values = dict(zip(header, rows[1].split(",")))
    assert float(values["revenue_A"]) == pytest.approx(5 * 0.5 * (1 - 0.5 ** (1 / 3)))
    assert float(values["revenue_B"]) == pytest.approx(102 * 0.25)


def test_repro_is_deterministic(capsys):
    a = call(capsys, "repro", "myerson-gap", "--seed", 3)
    b = call(capsys, "repro", "myerson-gap", "--seed", 3)
    assert a[0] == 0 and json.loads(a[1])["rows"] == json.loads(b[1])["rows"]
    assert "PASS" in a[2]
