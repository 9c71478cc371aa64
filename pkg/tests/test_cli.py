import json
import subprocess
import sys

import numpy as np
import pytest

from walkopt.cli import main, selftest
from walkopt.instance import AmenityTypeSpec, Instance, read_instance, write_instance
from walkopt.presets import counterexample_instance

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


@pytest.fixture
def ce_file(tmp_path):
    p = tmp_path / "ce.json"
    write_instance(counterexample_instance(restaurant_budget=1), p)
    return p


def test_selftest_output(capsys):
    assert selftest()
    out = capsys.readouterr().out
    assert "Δ(e|S)=5.77, Δ(e|T)=6.30, PASS" in out
    assert main(["selftest"]) == 0


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "walkopt.cli", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout


def test_exact_too_large_exits_3(tmp_path, capsys):
    p = tmp_path / "big.json"
    write_instance(counterexample_instance(restaurant_budget=7), p)
    assert main(["solve", "--instance", str(p), "--method", "exact", "--limit", "100"]) == 3
    assert "1716" in capsys.readouterr().err  # C(13, 7) restaurant multisets


def test_score_without_amenities(tmp_path, capsys):
    inst = Instance([0, 1], [], [], {}, np.zeros((2, 0)), [AmenityTypeSpec(0, "g", (1.0,), 0)])
    write_instance(inst, tmp_path / "empty.json")
    assert main(["score", "--instance", str(tmp_path / "empty.json")]) == 0
    assert capsys.readouterr().out.strip() == "F = 0.00"


def test_score_with_allocation_and_rounding(tmp_path, capsys):
    p = tmp_path / "ce.json"
    write_instance(counterexample_instance(), p)
    (tmp_path / "a.json").write_text(json.dumps(
        {"allocation": [{"type": 1, "node": n, "count": 1} for n in (1, 2, 3, 4, 7)]}))
    assert main(["score", "--instance", str(p), "--allocation", str(tmp_path / "a.json"),
                 "--round-weights", "2", "--out", str(tmp_path / "bd.json")]) == 0
    assert capsys.readouterr().out.strip() == "F = 13.27"
    bd = json.loads((tmp_path / "bd.json").read_text())
    assert bd["residents"][0]["weighted_distance"] == pytest.approx(1746.11, abs=0.01)


def test_solve_greedy_and_exact_agree(ce_file, tmp_path):
    for method in ("greedy", "exact"):
        out = tmp_path / f"{method}.json"
        assert main(["solve", "--instance", str(ce_file), "--method", method, "--out", str(out),
                     "--iterations-csv", str(tmp_path / "it.csv")]) == 0
        doc = json.loads(out.read_text())
        assert doc["allocation"] == [{"type": 1, "node": 7, "count": 1}]


def test_solve_single_scenario_with_k(ce_file, tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", "--instance", str(ce_file), "--scenario", "single", "--k", "0", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["allocation"] == []


def test_export_and_import(ce_file, tmp_path, capsys):
    assert main(["export", "--instance", str(ce_file), "--format", "lp", "--out", str(tmp_path / "m.lp")]) == 0
    assert main(["export", "--instance", str(ce_file), "--format", "mzn", "--out", str(tmp_path / "m.mzn")]) == 0
    (tmp_path / "m.sol").write_text("# Objective value = 9.6411\ny_6_1 1\n")
    assert main(["import-solution", "--instance", str(ce_file), "--model", str(tmp_path / "m.lp"),
                 "--sol", str(tmp_path / "m.sol"), "--out", str(tmp_path / "imp.json")]) == 0
    doc = json.loads((tmp_path / "imp.json").read_text())
    assert doc["reevaluated"] == pytest.approx(9.6411, abs=1e-4)
    (tmp_path / "bad.sol").write_text("zz_1 1\n")
    assert main(["import-solution", "--instance", str(ce_file), "--sol", str(tmp_path / "bad.sol")]) == 2


def test_ingest_and_sweep(tmp_path):
    out = tmp_path / "toy.json"
    assert main(["ingest", "--network", str(FIXTURES / "toy_network.geojson"),
                 "--points", str(FIXTURES / "toy_points.geojson"), "--preset", "toronto3", "--out", str(out)]) == 0
    inst = read_instance(out)
    assert inst.candidates == (3, 4) and inst.capacities == (2, 1)
    assert main(["sweep", "--instance", str(out), "--k-max", "2", "--scenario", "single",
                 "--out-dir", str(tmp_path / "sw")]) == 0
    for name in ("sweep.csv", "hist.csv", "summary.json"):
        assert (tmp_path / "sw" / name).exists()


def test_generate_is_deterministic(tmp_path):
    for name in ("a.json", "b.json"):
        assert main(["generate", "--seed", "4", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["solve"])
    assert err.value.code == 1
    (tmp_path / "bad.json").write_text("{")
    assert main(["score", "--instance", str(tmp_path / "bad.json")]) == 2
    write_instance(counterexample_instance(), tmp_path / "ce.json")
    raw = json.loads((tmp_path / "ce.json").read_text())
    raw["candidates"][0]["capacity"] = -1
    (tmp_path / "neg.json").write_text(json.dumps(raw))
    assert main(["score", "--instance", str(tmp_path / "neg.json")]) == 2
    assert "negative_capacity" in capsys.readouterr().err
