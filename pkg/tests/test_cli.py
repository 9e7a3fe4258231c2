import json
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from afcharges.cli import main
from afcharges.errors import PlanError
from afcharges.runner import parse_plan, resolve_plan


def write(tmp_path, text, name="plan.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def report(out, name):
    return json.loads((out / name / "report.json").read_text())


FLAT = """\
    name: flatplan
    ladder: [50, 100, 200, 400]
    quadrature_order: 12
    experiments:
      - {name: all, spec: flat, operations: [mass, momentum, centers]}
"""


def test_flat_plan_all_zero(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--out-dir", str(out), "run", write(tmp_path, FLAT)]) == 0
    res = report(out, "flatplan")["experiments"][0]["results"]["charges"]
    assert abs(res["mass"]) < 1e-12 and abs(res["mass_einstein"]) < 1e-12
    assert res["center_status"] == "undefined" and res["center_intrinsic"] is None
    assert (out / "flatplan" / "all.charges.csv").exists()


@pytest.mark.slow
def test_shipped_plan(tmp_path):
    out = tmp_path / "out"
    assert main(["--out-dir", str(out), "run", "schwarzschild_p123"]) == 0
    exps = {e["name"]: e for e in report(out, "schwarzschild_p123")["experiments"]}
    ch = exps["charges"]["results"]["charges"]
    assert ch["mass"] == pytest.approx(1.0, abs=2e-3)
    assert np.allclose(ch["center_intrinsic"], [1, 2, 3], atol=1e-2)
    assert np.allclose(ch["center_corvino_schoen"], [1, 2, 3], atol=1e-2)
    assert exps["equivariance"]["results"]["equivariance"]["max_defect"] <= 2e-2
    assert all(e["status"] == "ok" for e in exps.values())


def test_byte_identical_reruns(tmp_path):
    plan = write(tmp_path, """\
        name: repeat
        seed: 7
        quadrature_order: 16
        ladder: [50, 100, 200, 400]
        experiments:
          - {name: c, spec: harmonic_momentum, operations: [mass, momentum, centers]}
          - name: e
            spec: schwarzschild_p100
            operations: [equivariance]
            equivariance: {motions: 2}
    """)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out-dir", str(a), "run", plan]) == 0
    assert main(["--out-dir", str(b), "run", plan]) == 0
    files = sorted(p.name for p in (a / "repeat").iterdir())
    assert files == ["c.charges.csv", "e.equivariance.csv", "report.json"]
    for f in files:
        assert (a / "repeat" / f).read_bytes() == (b / "repeat" / f).read_bytes()
    assert report(a, "repeat")["config"]["seed"] == 7


def test_missing_ladder(tmp_path, capsys):
    plan = write(tmp_path, """\
        experiments:
          - {name: x, spec: flat, operations: [mass]}
    """)
    assert main(["run", plan]) == 1
    assert "plan.ladder" in capsys.readouterr().err


def test_yaml_error_has_position(tmp_path, capsys):
    plan = write(tmp_path, "ladder: [50, 100\nexperiments: x\n")
    assert main(["run", plan]) == 1
    assert "line" in capsys.readouterr().err


@pytest.mark.parametrize("data,path", [
    ({"ladder": [1, 2, 3], "experiments": [{"spec": "nope", "operations": ["mass"]}]},
     "plan.experiments[0].spec"),
    ({"ladder": [1, 2, 3], "experiments": [{"spec": "flat", "operations": ["fly"]}]},
     "plan.experiments[0].operations[0]"),
    ({"ladder": [3, 2, 1], "experiments": []}, "plan.ladder"),
    ({"ladder": [1, 2, 3], "colour": 1, "experiments": []}, "plan.colour"),
    ({"ladder": [1, 2, 3], "experiments": [
        {"spec": "schwarzschild_m1", "operations": ["cmc"], "cmc": {"a_exp": 1.5}}]},
     "plan.experiments[0].cmc.a_exp"),
])
def test_field_path_diagnostics(data, path):
    with pytest.raises(PlanError) as info:
        parse_plan(data)
    assert info.value.path == path


def test_failure_row_keeps_batch_running(tmp_path):
    plan = write(tmp_path, """\
        name: mixed
        quadrature_order: 12
        ladder: [50, 100, 200, 400]
        experiments:
          - name: bad
            spec: flat
            operations: [cmc]
            cmc: {radii: [100]}
          - {name: good, spec: schwarzschild_m1, operations: [mass]}
    """)
    out = tmp_path / "out"
    code = main(["--out-dir", str(out), "run", plan])
    rep = report(out, "mixed")
    status = {e["name"]: e["status"] for e in rep["experiments"]}
    assert status == {"bad": "failed", "good": "ok"} and rep["failures"] == 1
    assert code == 1
    text = (out / "mixed" / "bad.failure.csv").read_text()
    assert "UndefinedProblemError" in text
    mass = rep["experiments"][1]["results"]["charges"]["mass"]
    assert mass == pytest.approx(1.0, abs=1e-4)


def test_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("AFCHARGES_OUT_DIR", str(tmp_path / "env"))
    plan = write(tmp_path, FLAT)
    assert main(["--ladder", "60,120,240", "--quadrature-order", "10", "--seed", "3",
                 "run", plan]) == 0
    cfg = report(tmp_path / "env", "flatplan")["config"]
    assert cfg["ladder"] == [60.0, 120.0, 240.0]
    assert cfg["quadrature_order"] == 10 and cfg["seed"] == 3


def test_override_ladder_skips_missing_field():
    plan = parse_plan({"experiments": [{"spec": "flat", "operations": ["mass"]}]},
                      {"ladder": [10, 20, 40]})
    assert plan.ladder == [10.0, 20.0, 40.0]


def test_shipped_plans_resolve():
    plan = resolve_plan("schwarzschild_p123")
    assert [e["name"] for e in plan.experiments] == ["charges", "equivariance", "cmc", "lemma"]


def test_verify_unknown_suite(capsys):
    assert main(["verify", "nonsense"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "nonsense" in err


def test_list_specs(capsys):
    assert main(["list-specs"]) == 0
    out = capsys.readouterr().out
    assert "schwarzschild_p123" in out and "harmonic_momentum" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "afcharges", "--help"],
                          capture_output=True, text=True, check=True)
    assert "verify" in proc.stdout
