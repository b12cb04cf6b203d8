import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from tpmcheck import cli
from tpmcheck.errors import UndefinedObservableAtSample
from tpmcheck.report import dumps, format_float
from tpmcheck.scenario import load_scenario, parse_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).resolve().parent / "golden"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def qubit_doc(**over):
    doc = {"dim": 2, "beta": 1.0, "h_initial": {"eigenvalues": [0.0, 1.0]}, "evolution": "identity"}
    doc.update(over)
    return doc


def test_verify_hadamard(capsys):
    code, out, err = run(capsys, "verify", SCENARIOS / "hadamard-qubit.json")
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["eq1"]["full_grid"] - 1.0) <= 1e-12
    assert all(v for k, v in rep["checks"].items() if k != "tolerance")
    assert "elapsed" in err and "elapsed" not in out


def test_verify_key_order(capsys):
    _, out, _ = run(capsys, "verify", SCENARIOS / "identity-qubit.json")
    keys = list(json.loads(out))
    assert keys == [
        "tool", "conventions", "scenario", "eigen", "p_n", "conditional", "joint", "q_m",
        "work", "delta_f", "i_tilde", "residual", "eq1", "jarzynski", "thermal_chain", "checks",
    ]


def test_verify_identity_marks_undefined(capsys):
    _, out, _ = run(capsys, "verify", SCENARIOS / "identity-qubit.json")
    rep = json.loads(out)
    assert rep["i_tilde"][0][1] is None and rep["i_tilde"][1][0] is None
    assert rep["eq1"]["support_restricted"] == pytest.approx(0.60677578, abs=1e-6)


def test_non_unitary_evolution_exits_2(capsys, tmp_path):
    doc = qubit_doc(evolution={"kind": "matrix", "matrix": [[[1, 0], [0, 0]], [[0, 0], [2, 0]]]})
    code, _, err = run(capsys, "verify", write(tmp_path, doc))
    assert code == 2
    assert "unitary" in err.lower()


def test_non_hermitian_exits_2(capsys, tmp_path):
    doc = qubit_doc(h_initial={"matrix": [[0, 1], [0, 0]]})
    code, _, err = run(capsys, "verify", write(tmp_path, doc))
    assert code == 2 and "Hermitian" in err


@pytest.mark.parametrize(
    "doc,field",
    [
        ({k: v for k, v in qubit_doc().items() if k != "beta"}, "beta"),
        (qubit_doc(beta=-1), "beta"),
        (qubit_doc(evolution="swap"), "evolution.kind"),
        (qubit_doc(h_initial={"eigenvalues": [0.0]}), "h_initial.eigenvalues"),
        (qubit_doc(conventions={"work_sign": "other"}), "conventions.work_sign"),
        (qubit_doc(dim=3, evolution="hadamard", h_initial={"eigenvalues": [0, 1, 2]}), "evolution"),
        (qubit_doc(thermalized="yes"), "thermalized"),
    ],
)
def test_malformed_scenarios_exit_1(capsys, tmp_path, doc, field):
    code, _, err = run(capsys, "verify", write(tmp_path, doc))
    assert code == 1
    assert field in err


def test_unreadable_and_invalid_json(capsys, tmp_path):
    assert run(capsys, "verify", tmp_path / "missing.json")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", bad)[0] == 1


def test_bad_arguments_exit_1(capsys):
    assert run(capsys, "verify")[0] == 1
    assert run(capsys, "frobnicate", "x")[0] == 1


def test_round_trip_through_echo(capsys, tmp_path):
    for name in ("identity-qubit", "hadamard-qubit", "haar-qutrit"):
        _, first, _ = run(capsys, "verify", SCENARIOS / f"{name}.json")
        echo = write(tmp_path, json.loads(first)["scenario"], f"{name}-echo.json")
        _, second, _ = run(capsys, "verify", echo)
        assert first == second


def test_scenario_to_json_reparses_equal():
    s = load_scenario(SCENARIOS / "haar-qutrit.json")
    again = parse_scenario(json.loads(dumps(s.to_json())))
    assert again.to_json() == s.to_json()


@pytest.mark.parametrize("name", ["identity-qubit", "hadamard-qubit"])
def test_verify_matches_golden(capsys, name):
    _, out, _ = run(capsys, "verify", SCENARIOS / f"{name}.json")
    assert out == (GOLDEN / f"verify-{name}.json").read_text()


def test_sweep_matches_golden(capsys):
    _, out, _ = run(capsys, "sweep", SCENARIOS / "identity-qubit.json", "--from", "0.1", "--to", "2", "--steps", "5")
    assert out == (GOLDEN / "sweep-identity-qubit.csv").read_text()


def test_verify_csv(capsys):
    code, out, _ = run(capsys, "verify", SCENARIOS / "hadamard-qubit.json", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["field", "value"]
    values = dict(rows[1:])
    assert float(values["eq1.full_grid"]) == pytest.approx(1.0, abs=1e-12)
    assert values["checks.thermal_chain"] == "true"


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = run(capsys, "verify", SCENARIOS / "hadamard-qubit.json", "--out", out)
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["tool"]["name"] == "tpmcheck"


def test_precision_env(capsys, monkeypatch):
    monkeypatch.setenv("REPORT_PRECISION", "6")
    _, out, _ = run(capsys, "verify", SCENARIOS / "identity-qubit.json")
    assert '"p_n": [0.731059, 0.268941]' in out
    monkeypatch.setenv("REPORT_PRECISION", "5")
    assert run(capsys, "verify", SCENARIOS / "identity-qubit.json")[0] == 1


def test_format_float():
    assert format_float(0.1, 17) == "0.10000000000000001"
    assert format_float(1.0, 17) == "1.0"
    assert format_float(-0.0, 17) == "0.0"
    assert format_float(math.nan, 17) == "null"
    assert float(format_float(math.pi, 17)) == math.pi


def test_sample_constant_observable(capsys):
    code, out, _ = run(
        capsys, "sample", SCENARIOS / "hadamard-qubit.json", "--observable", "exp_neg_i_tilde", "--shots", "5000"
    )
    assert code == 0
    (row,) = json.loads(out)["results"]
    assert row["mean"] == pytest.approx(1.0, abs=1e-15) and row["sample_std"] == 0.0


def test_sample_is_byte_identical(capsys):
    argv = ("sample", SCENARIOS / "haar-qutrit.json", "--shots", "20000", "--seed", "42", "--format", "csv")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert [r["observable"] for r in rows] == ["exp_neg_i_tilde", "exp_jarzynski", "work_mean"]


def test_sample_identity_exp_neg_i_tilde_never_undefined(capsys):
    code, _, _ = run(capsys, "sample", SCENARIOS / "identity-qubit.json", "--observable", "exp_neg_i_tilde")
    assert code == 0


def test_sample_undefined_exits_3(capsys, monkeypatch):
    def boom(*a, **k):
        raise UndefinedObservableAtSample(0, 1, "exp_neg_i_tilde")

    monkeypatch.setattr(cli, "estimate", boom)
    code, _, err = run(capsys, "sample", SCENARIOS / "identity-qubit.json")
    assert code == 3 and "(n=0, m=1)" in err


def test_sample_bad_shots(capsys):
    assert run(capsys, "sample", SCENARIOS / "identity-qubit.json", "--shots", "0")[0] == 1
    assert run(capsys, "sample", SCENARIOS / "identity-qubit.json", "--seed", "-3")[0] == 1


def test_search_cli(capsys, tmp_path):
    argv = ("search", SCENARIOS / "identity-qubit.json", "--starts", "4", "--seed", "7")
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    s = json.loads(a)["search"]
    assert s["objective"] == pytest.approx(0.4345613244, abs=1e-6)
    u = np.array([[complex(*z) for z in row] for row in s["best_unitary"]])
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-10)


def test_search_near_infinite_temperature_cli(capsys, tmp_path):
    p = write(tmp_path, qubit_doc(beta=1e-6))
    code, out, _ = run(capsys, "search", p, "--starts", "8")
    assert code == 0 and json.loads(out)["search"]["objective"] < 1e-10


def test_search_bad_budget(capsys):
    assert run(capsys, "search", SCENARIOS / "identity-qubit.json", "--max-iter", "99")[0] == 1
    assert run(capsys, "search", SCENARIOS / "identity-qubit.json", "--starts", "0")[0] == 1


def test_sweep_full_grid_holds(capsys):
    code, out, _ = run(capsys, "sweep", SCENARIOS / "haar-qutrit.json", "--from", "0.1", "--to", "2", "--steps", "5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 5
    for r in rows:
        assert abs(float(r["eq1_full_grid"]) - 1) <= 1e-10


def test_sweep_support_restricted_decreases_in_beta(capsys):
    _, out, _ = run(capsys, "sweep", SCENARIOS / "identity-qubit.json", "--from", "0.1", "--to", "2", "--steps", "5")
    rows = list(csv.DictReader(io.StringIO(out)))
    got = np.array([float(r["eq1_support_restricted"]) for r in rows])
    betas = np.array([float(r["beta"]) for r in rows])
    oracle = (1 + np.exp(-2 * betas)) / (1 + np.exp(-betas)) ** 2  # p_0^2 + p_1^2
    np.testing.assert_allclose(got, oracle, rtol=1e-14)
    assert np.all(np.sign(np.diff(got)) == np.sign(np.diff(oracle)))


def test_sweep_preconditions(capsys):
    base = ("sweep", SCENARIOS / "identity-qubit.json")
    assert run(capsys, *base, "--from", "0.1", "--to", "2", "--steps", "1")[0] == 1
    assert run(capsys, *base, "--from", "2", "--to", "1", "--steps", "3")[0] == 1
    assert run(capsys, *base, "--param", "dim", "--from", "1", "--to", "2", "--steps", "3")[0] == 1
