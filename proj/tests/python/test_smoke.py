import json
import os
import pathlib
import subprocess

import numpy as np
import pytest

import divflow

ROOT = pathlib.Path(__file__).resolve().parents[2]
CLI = os.environ.get("DIVFLOW_CLI")
CROSSING = {"kind": "hermitian_path", "knots": [{"s": 0, "matrix": [[-1]]}, {"s": 1, "matrix": [[1]]}]}


def test_clifford_relations():
    for p in range(1, 5):
        c = divflow.clifford_generators(p)
        for i, a in enumerate(c):
            for j, b in enumerate(c):
                target = -2 * np.eye(a.shape[0]) if i == j else 0
                assert np.abs(a @ b + b @ a - target).max() < 1e-12
    assert divflow.clifford_grading(1) is None
    assert divflow.clifford_grading(2) is not None


def test_flows():
    assert divflow.spectral_flow([0.0, 1.0], [np.array([[-1.0]]), np.array([[1.0]])]) == 1
    value, snapped, residual = divflow.winding_df(-2)
    assert snapped == -2 and abs(value + 2) < 1e-8 and residual < 1e-8
    _, snapped, _ = divflow.suspended_df([0.0, 1.0], [np.array([[-1.0]]), np.array([[1.0]])], p=1, sign=-1)
    assert snapped == -1
    d = np.diag([1.0, 2.0, -3.0])
    assert divflow.eta_spectral(d) == 1.0
    assert abs(divflow.eta_parametric(d, 1) - 1.0) < 1e-6


def test_records():
    r = divflow.run("df", {"kind": "winding", "n": 1}, k=0)
    assert r["snapped"] == 1 and r["residual"] < 1e-8
    assert r["input_digest"].startswith("sha256:")
    s = divflow.run("suspend", CROSSING, p=1, sign=1)
    assert s["extra"]["SF"] == 1 and s["extra"]["DF"] == 1 and s["extra"]["match"]
    assert divflow.run("df", {"kind": "winding", "n": 1}) == divflow.run("df", {"kind": "winding", "n": 1})
    v = divflow.verify("cyclic", seed=7)
    assert v["extra"]["pass"]
    csv = divflow.trace_csv(CROSSING, nodes=4)
    assert csv.splitlines()[0] == "s,lambda_0,eta_reduced_mod_1"
    assert divflow.default_config()["path_nodes"] % 8 == 0


def test_errors():
    with pytest.raises(divflow.PreconditionError):
        divflow.run("df", {"kind": "teapot"})
    with pytest.raises(divflow.PreconditionError):
        divflow.spectral_flow([0.0, 1.0], [np.array([[0.0]]), np.array([[1.0]])])
    assert issubclass(divflow.JsonSyntaxError, divflow.PreconditionError)


def test_records_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((ROOT / "schemas" / "result.v1.schema.json").read_text())
    jsonschema.validate(divflow.run("sf", CROSSING), schema)
    jsonschema.validate(divflow.run("regint", {"kind": "radial_exp", "rate": 1}), schema)
    family = json.loads((ROOT / "schemas" / "family.v1.schema.json").read_text())
    for path in sorted((ROOT / "tools" / "examples").glob("*.json")):
        jsonschema.validate(json.loads(path.read_text()), family)


def _cli(*args, stdin=None, env=None):
    return subprocess.run([CLI, *args], input=stdin, capture_output=True, text=True, env=env)


@pytest.mark.skipif(not CLI, reason="DIVFLOW_CLI not set")
def test_cli_outputs_and_exit_codes(tmp_path):
    spec = ROOT / "tools" / "examples" / "winding1.json"
    a = _cli("df", "--input", str(spec), "--k", "0")
    b = _cli("df", "--input", str(spec), "--k", "0")
    assert a.returncode == 0 and a.stdout == b.stdout
    assert json.loads(a.stdout)["snapped"] == 1

    out = tmp_path / "r.json"
    assert _cli("suspend", "--input", str(ROOT / "tools" / "examples" / "crossing.json"), "--p", "1", "--sign", "+",
                "--out", str(out)).returncode == 0
    assert json.loads(out.read_text())["extra"]["match"] is True

    bad = _cli("df", "--input", "-", stdin='{"kind": "winding",\n "n": 1,}')
    assert bad.returncode == 1 and "line 2" in bad.stderr
    assert _cli("df", "--input", "-", stdin='{"kind": "winding"}').returncode == 2
    assert _cli("df", "--input", str(spec), "--k", "3").returncode == 2
    assert _cli("df", "--bogus").returncode == 2
    assert _cli("verify", "--suite", "cyclic", "--seed", "7").returncode == 0

    # Convergence failure: a single tail shell can never confirm the remainder is small.
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"quad": {"max_shells": 1}}))
    env = dict(os.environ, DIVFLOW_CONFIG=str(cfg))
    hard = _cli("regint", "--input", str(ROOT / "tools" / "examples" / "regint_lorentz.json"), env=env)
    assert hard.returncode == 3, hard.stderr

    # Precedence: the config file beats defaults, flags beat the config file.
    cfg.write_text(json.dumps({"quad": {"path_nodes": 8}}))
    echoed = _cli("df", "--input", str(spec), env=env)
    assert json.loads(echoed.stdout)["config"]["quad"]["path_nodes"] == 8
    override = _cli("df", "--input", str(spec), "--nodes", "16", env=env)
    assert json.loads(override.stdout)["config"]["nodes"] == 16
