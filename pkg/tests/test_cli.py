import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from icpovm.cli import main
from icpovm.dilation import (
    dilation_to_dict,
    matrix_to_list,
    u_sic1_reference,
)
from icpovm.equivalence import canonical_core
from icpovm.gates import Circuit
from icpovm.linalg import global_phase_distance
from icpovm.operators import CNOT_AS
from icpovm.povm import SicParams, construct_from_eta, construct_sic, povm_to_dict, reference_set
from icpovm.serialization import dumps


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(dumps(obj))
    return path


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def cmatrix(data):
    return np.array([[complex(*z) for z in row] for row in data])


# --- validate ------------------------------------------------------------------------


def test_validate_reference_files(tmp_path, capsys):
    for which in ("set1", "set2"):
        path = write(tmp_path, f"{which}.json", povm_to_dict(reference_set(which)))
        code, out = run(capsys, "validate", path)
        assert code == 0
        report = json.loads(out)
        assert report["sic"] and report["ic"] and report["complete"]


def test_validate_zero_kets_fails(tmp_path, capsys):
    path = write(tmp_path, "zero.json", {"kets": [[[0, 0], [0, 0]]] * 4})
    code, out = run(capsys, "validate", path)
    assert code == 1
    assert json.loads(out)["complete"] is False


def test_io_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert run(capsys, "validate", bad)[0] == 2
    assert run(capsys, "validate", tmp_path / "missing.json")[0] == 2
    assert run(capsys, "classify", write(tmp_path, "m.json", {"unitary": [[1]]}))[0] == 2
    assert run(capsys, "validate", write(tmp_path, "k.json", {"kets": 3}))[0] == 2


# --- classify -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "U,count",
    [(CNOT_AS, 1), (np.eye(4), 0), (u_sic1_reference(0).U, 3)],
)
def test_classify_examples(tmp_path, capsys, U, count):
    code, out = run(capsys, "classify", write(tmp_path, "u.json", matrix_to_list(U)))
    assert code == 0
    res = json.loads(out)
    assert res["cnot_count"] == count
    assert res["k"] == [res["k1"], res["k2"], res["k3"]]


def test_classify_tolerance_flags(tmp_path, capsys):
    path = write(tmp_path, "u.json", matrix_to_list(canonical_core([np.pi / 4, 1e-3, 0])))
    assert json.loads(run(capsys, "classify", path)[1])["cnot_count"] == 2
    assert json.loads(run(capsys, "classify", path, "--tol-1", "1e-2")[1])["cnot_count"] == 1


def test_classify_non_unitary_is_domain_error(tmp_path, capsys):
    path = write(tmp_path, "u.json", matrix_to_list(2 * np.eye(4)))
    assert run(capsys, "classify", path)[0] == 1


# --- compile-sic -----------------------------------------------------------------------


def test_compile_set2(capsys):
    code, out = run(capsys, "compile-sic", "set2")
    assert code == 0
    res = json.loads(out)
    assert res["c"] == 1
    assert global_phase_distance(cmatrix(res["U_S"]), np.eye(2))[0] < 1e-8


def test_compile_reference_dilation_label(tmp_path, capsys):
    path = write(tmp_path, "d.json", dilation_to_dict(u_sic1_reference(0)))
    code, out = run(capsys, "compile-sic", "--dilation", path)
    assert code == 0 and json.loads(out)["c"] == 0


def test_compile_random_sic(tmp_path, capsys):
    p = construct_sic(SicParams(1.1, 2.3, 0.4, 1))
    circ_path = tmp_path / "circ.json"
    code, out = run(capsys, "compile-sic", write(tmp_path, "p.json", povm_to_dict(p)), "--circuit-out", circ_path)
    assert code == 0
    res = json.loads(out)
    assert max(res["residuals"].values()) < 1e-8
    circ = Circuit.from_dict(json.loads(circ_path.read_text()))
    assert circ.cnot_count == 1


def test_compile_non_sic_fails(tmp_path, capsys, rng):
    p = construct_from_eta(rng.normal(size=(3, 3)))
    assert run(capsys, "compile-sic", write(tmp_path, "p.json", povm_to_dict(p)))[0] == 1


# --- optimize -------------------------------------------------------------------------


def test_optimize_reference_and_roundtrip(tmp_path, capsys):
    src = write(tmp_path, "d.json", dilation_to_dict(u_sic1_reference(0)))
    out_path = tmp_path / "opt.json"
    assert run(capsys, "optimize", src, "-o", out_path)[0] == 0
    res = json.loads(out_path.read_text())
    assert res["cnot_count"] == 2 and res["povm_residual"] < 1e-9
    # the output is itself a valid dilation record
    code, out = run(capsys, "classify", out_path)
    assert code == 0 and json.loads(out)["cnot_count"] == 2
    code, out = run(capsys, "optimize", out_path)
    assert all(v == 0 for v in json.loads(out)["theta_star"].values())


def test_optimize_already_two(tmp_path, capsys):
    src = write(tmp_path, "u.json", matrix_to_list(canonical_core([0.5, 0.2, 0.0])))
    res = json.loads(run(capsys, "optimize", src)[1])
    assert all(v == 0 for v in res["theta_star"].values())


def test_optimize_batch(tmp_path, capsys, rng):
    for i in range(100):
        p = construct_from_eta(rng.normal(size=(3, 3)))
        code, out = run(capsys, "optimize", write(tmp_path, f"p{i}.json", povm_to_dict(p)))
        assert code == 0
        res = json.loads(out)
        assert res["cnot_count"] <= 2 and res["povm_residual"] < 1e-9


# --- shadow-estimate -------------------------------------------------------------------


def last_row(out):
    row = read_csv(out)[-1]
    return float(row["mean"]), float(row["std_error"])


def test_shadow_ghz_noiseless(capsys):
    code, out = run(capsys, "shadow-estimate", "--state", "ghz", "--n", 6, "--shots", "1000,100000", "--seed", 1)
    assert code == 0
    rows = read_csv(out)
    assert [r["shots"] for r in rows] == ["1000", "100000"]
    assert set(rows[0]) == {"shots", "mean", "std_error", "variance", "mse_vs_ideal"}
    mean, se = last_row(out)
    assert abs(mean - 1) < 5 * se


def test_shadow_depolarized(capsys):
    for p, ideal in ((0.2, 0.803125), (1.0, 1 / 64)):
        code, out = run(capsys, "shadow-estimate", "--state", "depolarized", "--p", p, "--shots", 100000, "--seed", 2)
        mean, se = last_row(out)
        assert abs(mean - ideal) < 5 * se


def test_shadow_is_deterministic(capsys, monkeypatch):
    args = ["shadow-estimate", "--n", 3, "--shots", "500,2000", "--noise", "default", "--circuit", "2cnot"]
    a = run(capsys, *args, "--seed", 4)[1]
    b = run(capsys, *args, "--seed", 4)[1]
    assert a == b
    monkeypatch.setenv("ICPOVM_SEED", "4")
    assert run(capsys, *args)[1] == a
    monkeypatch.setenv("ICPOVM_SEED", "5")
    assert run(capsys, *args)[1] != a


def test_shadow_sequential_and_file_inputs(tmp_path, capsys):
    noise = write(tmp_path, "noise.json", {"seed": 3, "t1_mean": 5e-5, "t2_mean": 5e-5})
    povm = write(tmp_path, "p.json", povm_to_dict(reference_set("set2")))
    circ = write(tmp_path, "c.json", json.loads(run(capsys, "compile-sic", "set2")[1])["practical_circuit"])
    code, out = run(
        capsys, "shadow-estimate", "--n", 2, "--shots", 3000, "--povm", povm, "--circuit", circ,
        "--noise", noise, "--sampler", "sequential",
    )
    assert code == 0
    mean, se = last_row(out)
    assert 0.5 < mean < 1 + 5 * se


def test_shadow_errors(capsys):
    assert run(capsys, "shadow-estimate", "--povm", "optimal")[0] == 1
    assert run(capsys, "shadow-estimate", "--shots", "abc")[0] == 2
    assert run(capsys, "shadow-estimate", "--n", 13, "--shots", 10)[0] == 1


def test_relabel_table_json(capsys):
    code, out = run(capsys, "relabel-table", "--format", "json")
    assert code == 0 and json.loads(out)["3e"] == "3241"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "icpovm", "relabel-table"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[1].split()[1:3] == ["1234", "1243"]


def test_float_serialization_round_trips(rng):
    x = rng.normal(size=50)
    assert np.array_equal(np.array(json.loads(dumps(x.tolist()))), x)
    assert dumps(1.0) == "1.0"
    with pytest.raises(ValueError):
        dumps(float("nan"))
