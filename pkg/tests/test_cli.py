import json
import math
import subprocess
import sys

import pytest

from ksforge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def strip_clock(report):
    report = dict(report)
    report.pop("wall_clock")
    return report


def test_catalog_list_and_verify(capsys):
    code, rep = run(capsys, "catalog", "list")
    assert code == 0 and "peres57" in rep["results"]["entries"]
    code, rep = run(capsys, "catalog", "verify", "peres57")
    assert code == 0
    obs = {c["name"]: c["observed"] for c in rep["checks"]}
    assert obs == {"peres57.vertex_count": 57, "peres57.hyperedge_count": 40, "peres57.colourable": False}


def test_catalog_verify_two_qubit_and_unentangled(capsys):
    code, rep = run(capsys, "catalog", "verify", "two_qubit_ks")
    assert code == 0
    names = {c["name"]: c for c in rep["checks"]}
    assert names["two_qubit_ks.fully_entangled_hyperedges"]["observed"] == 0
    code, rep = run(capsys, "catalog", "verify", "unentangled_2x3")
    assert code == 0
    assert rep["results"]["unentangled_2x3"]["hyperedge_sizes"] == [6]


def test_colour_files(capsys, tmp_path):
    out = tmp_path / "p57.json"
    assert main(["catalog", "build", "peres57", "--out", str(out)]) == 0
    capsys.readouterr()
    code, rep = run(capsys, "colour", str(out))
    assert code == 0 and rep["results"]["colouring"] == "UNCOLOURABLE"

    comp = tmp_path / "comp.json"
    comp.write_text(json.dumps({"vertices": ["a", "b"], "hyperedges": [["a", "b"]]}))
    code, rep = run(capsys, "colour", str(comp))
    assert code == 0 and rep["results"]["colouring"] == {"a": 1, "b": 0}

    prod = tmp_path / "prod.json"
    main(["catalog", "build", "product_2q_pauli", "--out", str(prod)])
    capsys.readouterr()
    code, rep = run(capsys, "colour", str(prod), "--north")
    assert code == 0 and all(c["pass"] for c in rep["checks"])


def test_simulate_examples(capsys):
    code, rep = run(capsys, "simulate", "--psi", "+", "--chi", "0", "--samples", "1000000", "--seed", "42")
    assert code == 0
    assert abs(rep["results"]["estimate"] - 0.5) < 4 * math.sqrt(0.25 / 1e6)
    code, rep = run(capsys, "simulate", "--psi", "0+", "--chi", "0+", "--samples", "1000", "--seed", "1")
    assert code == 0 and rep["results"]["estimate"] == 1.0
    code, rep = run(capsys, "simulate", "--basis", "eq1", "--chi", "+++", "--samples", "200000", "--seed", "3")
    assert code == 0
    assert rep["results"]["born"] == pytest.approx([1 / 8, 1 / 4, 1 / 4, 1 / 4, 1 / 8, 0, 0, 0])


def test_bell_commands(capsys):
    code, rep = run(capsys, "bell", "chsh", "--state", "singlet")
    assert code == 0
    assert abs(rep["results"]["chsh"] - 2 * math.sqrt(2)) < 1e-9
    assert rep["results"]["locality"] == "nonlocal"
    code, rep = run(capsys, "bell", "chsh", "--state", "maximally-mixed")
    assert code == 0 and abs(rep["results"]["chsh"]) < 1e-12 and rep["results"]["locality"] == "local"
    code, rep = run(capsys, "bell", "pipeline", "--demo", "chsh")
    assert code == 0 and rep["results"]["checks"]["extra_saturated_by_deterministic"]
    code, rep = run(capsys, "bell", "hypergraph", "--settings", "2", "2")
    assert code == 0 and rep["results"]["counts"] == {"vertices": 16, "hyperedges": 12}


def test_bell_pipeline_from_files(capsys, tmp_path):
    rays = tmp_path / "rays.json"
    rays.write_text(json.dumps(["00", "01", "10", "11", "+0", "+1", "-0", "-1"]))
    code, rep = run(capsys, "bell", "pipeline", "--rays", str(rays), "--state", "singlet")
    assert code == 0 and rep["results"]["ok"]


@pytest.mark.parametrize("argv", [
    ["catalog", "verify", "nope"],
    ["simulate", "--psi", "0+", "--chi", "0", "--seed", "1", "--samples", "10"],
    ["simulate", "--psi", "0", "--chi", "0"],
    ["bell", "hypergraph", "--settings", "2", "2", "2", "2"],
    ["northcheck", "--n", "0", "--trials", "1", "--seed", "1"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["colour", str(bad)]) == 2
    assert "malformed" in capsys.readouterr().err


def test_statistical_failure_exit_1(capsys, tmp_path):
    # a three-member "basis" cannot give one outcome per sample
    basis = tmp_path / "b.json"
    basis.write_text(json.dumps(["0", "1", "+"]))
    code, rep = run(capsys, "simulate", "--basis", str(basis), "--chi", "0", "--samples", "100", "--seed", "1")
    assert code == 1 and not rep["pass"]


def test_reports_are_reproducible(capsys):
    argv = ["simulate", "--psi", "+i", "--chi", "0+", "--samples", "20000", "--seed", "9"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    assert json.dumps(strip_clock(a), sort_keys=True) == json.dumps(strip_clock(b), sort_keys=True)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ksforge", "catalog", "list"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["command"] == "catalog list"
