import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from loqsim import harness
from loqsim.cli import _int_list, build_parser, config_from_args, main
from loqsim.codec import FormatSpec
from loqsim.simulator import PackedState

from published_tables import GATE_BUDGETS, RANDOM_TRIPLETS


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cli(tmp_path, *args, fmt="csv"):
    out = tmp_path / f"out.{fmt}"
    code = main([*args, "--out", str(out), "--format", fmt])
    assert code == 0
    return read_csv(out) if fmt == "csv" else json.loads(out.read_text())


def test_int_list_parsing():
    assert _int_list("8-11") == [8, 9, 10, 11]
    assert _int_list("16,20, 24") == [16, 20, 24]
    assert _int_list("1,4-5") == [1, 4, 5]


def test_tables_csv(tmp_path):
    rows = cli(tmp_path, "tables")
    assert len(rows) == 33 * 4
    assert set(rows[0]) == {"B", "Q", "regime", "E", "F", "A", "eps"}
    by_key = {(int(r["B"]), int(r["Q"])): (int(r["E"]), int(r["F"]), int(r["A"])) for r in rows}
    assert by_key[(16, 20)] == RANDOM_TRIPLETS[16][0]
    assert by_key[(40, 50)] == RANDOM_TRIPLETS[40][3]


def test_tables_biased_json(tmp_path):
    doc = cli(tmp_path, "tables", "--regime", "biased", "--bits", "12", "--qubits", "40", fmt="json")
    (row,) = doc["rows"]
    assert (row["E"], row["F"], row["A"]) == (5, 2, 5)
    assert doc["config"]["regime"] == "biased"


def test_budget_csv(tmp_path):
    rows = cli(tmp_path, "budget")
    assert [int(r["B"]) for r in rows] == sorted(GATE_BUDGETS)
    assert set(rows[0]) >= {"B", "E", "F", "A", "eps_c_sq", "G_random", "eps_b_sq", "G_biased"}
    r16 = next(r for r in rows if r["B"] == "16")
    assert int(r16["G_random"]) == 475 and int(r16["G_biased"]) == 13
    # floats written with repr round-trip exactly
    assert float(r16["eps_c_sq"]) == harness.budget(50, 0.5, [16])[0]["eps_c_sq"]


def test_sigma_vs_g(tmp_path):
    rows = cli(tmp_path, "sigma-vs-g", "--qubits", "6", "--cycles", "2", "--triplet", "4,9,11", "--seed", "0,1")
    assert len(rows) == 2 * (2 * 6 + 1)
    assert float(rows[0]["G"]) == 0
    last = rows[12]
    assert float(last["G"]) == 12
    assert 0.2 < float(last["ratio"]) < 5


def test_roundtrip(tmp_path):
    doc = cli(tmp_path, "roundtrip", "--qubits", "6", "--bits", "16", "--cycles", "2", fmt="json")
    (row,) = doc["rows"]
    assert (row["E"], row["F"], row["A"]) == (4, 5, 7)  # resolved at 20 qubits
    assert row["G"] == 2 * 2 * 6
    exact = cli(tmp_path, "roundtrip", "--qubits", "6", "--triplet", "4,5,7", "--cycles", "2", "--exact", fmt="json")
    assert exact["rows"][0]["sigma_sq_actual"] < 1e-25


def test_table_qubits_override():
    args = build_parser().parse_args(["roundtrip", "--qubits", "8", "--bits", "16", "--table-qubits", "0"])
    cfg = config_from_args(args)
    assert harness.resolve_specs(cfg) == [FormatSpec(3, 5, 8)]


def test_qft_test(tmp_path):
    doc = cli(tmp_path, "qft-test", "--qubits", "5,6", "--triplet", "4,5,7;4,13,15", "--approximate", fmt="json")
    assert len(doc["rows"]) == 4
    for r in doc["rows"]:
        assert r["hadamards"] == r["q"]
        if r["A"] == 15:
            assert r["G"] == r["hadamards"]


def test_qft_defaults():
    args = build_parser().parse_args(["qft-test"])
    cfg = config_from_args(args)
    assert cfg.qubit_list == [12, 14]
    assert cfg.mode.phase_jitter
    off = config_from_args(build_parser().parse_args(["qft-test", "--phase-jitter", "off"]))
    assert not off.mode.phase_jitter
    assert harness.resolve_specs(cfg, harness.QFT_SPECS)[0] == FormatSpec(4, 5, 7)


def test_porter_thomas(tmp_path):
    doc = cli(tmp_path, "porter-thomas", "--qubits", "8", "--cycles", "5", "--triplet", "4,13,15", fmt="json")
    assert set(doc["summary"]) == {"seed=0 double", "seed=0 4,13,15"}
    xs = [r for r in doc["rows"] if r["arithmetic"] == "double"]
    assert all(0 <= r["ccdf"] <= 1 for r in xs)


def test_histograms(tmp_path):
    doc = cli(tmp_path, "histograms", "--qubits", "8", "--cycles", "2", fmt="json")
    kinds = {r["kind"] for r in doc["rows"]}
    assert kinds == {"eps", "gamma", "cumulative_real"}
    assert sum(r["count"] for r in doc["rows"] if r["kind"] == "eps") > 200
    (summary,) = doc["summary"].values()
    assert {"eps_chi2_p", "gamma_chi2_p", "cumulative_ks_p"} <= set(summary)


def test_rootz(tmp_path):
    off = cli(tmp_path, "rootz", "--seed", "0,1", "--phase-jitter", "off", fmt="json")
    assert all(r["phase_steps"] == 0 for r in off["rows"])
    assert off["summary"]["expected_phase"] == pytest.approx(math.pi)
    on = cli(tmp_path, "rootz", "--seed", "0-19", "--phase-jitter", "on", fmt="json")
    assert abs(on["summary"]["z_score"]) < 5


def test_memory_cap(monkeypatch, capsys):
    monkeypatch.setenv("LOQSIM_MAX_QUBITS", "10")
    assert main(["sigma-vs-g", "--qubits", "11"]) == 2
    assert "memory cap" in capsys.readouterr().err
    # formula-only commands ignore the cap
    monkeypatch.setenv("LOQSIM_MAX_QUBITS", "4")
    assert main(["budget", "--qubits", "50", "--out", "/dev/null"]) == 0


def test_bad_triplet_is_a_usage_error(capsys):
    with pytest.raises(SystemExit):
        main(["roundtrip", "--triplet", "4,5"])


def test_csv_summary_on_stderr(tmp_path, capsys):
    main(["rootz", "--seed", "0,1", "--out", str(tmp_path / "r.csv")])
    assert "mean_phase" in capsys.readouterr().err


# -- simulate ------------------------------------------------------------------------


CIRCUIT = """\
H 0
CNOT 0 1
CP 1 2 2
U3 2 0.3 0.1 -0.2
"""


def test_simulate_and_state_files(tmp_path):
    cfile = tmp_path / "c.txt"
    cfile.write_text(CIRCUIT)
    state = tmp_path / "s.lqs"
    rows = cli(tmp_path, "simulate", "--circuit", str(cfile), "--triplet", "4,9,11", "--save-state", str(state))
    assert len(rows) == 5
    assert [float(r["G"]) for r in rows] == [0, 1, 1, 1, 2]
    assert float(rows[-1]["sigma_sq"]) < 1e-4
    saved = PackedState.load(state)
    assert saved.q == 3 and saved.spec == FormatSpec(4, 9, 11)

    inv = tmp_path / "inv.txt"
    from loqsim.gates import parse_circuit

    inv.write_text(parse_circuit(CIRCUIT).inverse().to_text())
    back = tmp_path / "b.lqs"
    cli(tmp_path, "simulate", "--circuit", str(inv), "--load-state", str(state), "--save-state", str(back))
    amps = PackedState.load(back).amplitudes()
    assert abs(amps[0]) == pytest.approx(1, abs=0.01)
    assert np.sum(np.abs(amps[1:]) ** 2) < 1e-3


def test_simulate_errors(tmp_path, capsys):
    cfile = tmp_path / "c.txt"
    cfile.write_text("H 0\nBOGUS 1\n")
    assert main(["simulate", "--circuit", str(cfile)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["simulate", "--circuit", str(tmp_path / "missing.txt")]) == 2


def test_simulate_qubit_mismatch(tmp_path):
    cfile = tmp_path / "c.txt"
    cfile.write_text("H 3\n")
    state = tmp_path / "s.lqs"
    PackedState.basis(2, FormatSpec(4, 5, 7)).save(state)
    assert main(["simulate", "--circuit", str(cfile), "--load-state", str(state)]) == 2


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "loqsim.cli", "budget", "--bits", "16"], capture_output=True, text=True, check=True
    )
    assert out.stdout.splitlines()[0].startswith("B,")
