import csv
import json
import math
import subprocess
import sys

import pytest

from frontwave import cli
from frontwave.cli import main
from frontwave.singular_ode import IntegratorConfig


def run(capsys, *argv):
    code = main(list(argv) + ["--json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


# ------------------------------------------------------------ validate

def test_validate_preset_ok(capsys):
    code, rep = run(capsys, "validate", "--preset", "remark_6_2")
    assert code == 0
    assert rep["report"]["verdicts"]["(q)"] == "holds"


def test_validate_mismatched_model(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"f": {"poly": [0]}, "D": {"poly": [0, 1]}, "g": {"poly": [0, 1]}}))
    code, rep = run(capsys, "validate", "--model", str(path))
    assert code == 2
    assert rep["report"]["scenario"] == "semi-wavefront"
    assert rep["report"]["scenario_consistent"] is False


def test_validate_missing_derivative(capsys):
    code, rep = run(capsys, "validate", "--preset", "oscillatory_8_3")
    assert code == 3
    assert rep["report"]["dq0_exists"] is False


def test_unknown_preset_is_model_error(capsys):
    assert main(["validate", "--preset", "nope"]) == 2


def test_unreadable_model_file(tmp_path, capsys):
    assert main(["validate", "--model", str(tmp_path / "missing.json")]) == 2


# ------------------------------------------------------------ cstar / bounds

@pytest.mark.parametrize("name,exact", [("fisher", 2.0), ("remark_6_2", 0.0)])
def test_cstar(tmp_path, capsys, name, exact):
    code, rep = run(capsys, "cstar", "--preset", name, "--out", str(tmp_path))
    assert code == 0
    assert abs(rep["c_star"] - exact) <= 1e-3
    assert (tmp_path / "cstar.json").exists()
    with open(tmp_path / "cstar_witness.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["phi", "z"] and len(rows) > 10


def test_cstar_refused_without_derivative(capsys):
    assert main(["cstar", "--preset", "oscillatory_8_3"]) == 3


def test_bounds(capsys):
    code, rep = run(capsys, "bounds", "--preset", "fisher")
    assert code == 0
    assert rep["bounds"]["lower"] == pytest.approx(2.0)


# ------------------------------------------------------------ beta

def test_beta_single_speed(capsys):
    code, rep = run(capsys, "beta", "--preset", "remark_6_2", "--c", "1", "--c-star", "0")
    assert code == 0
    row = rep["results"][0]
    assert row["floor"] == pytest.approx(-1.5)
    assert row["floor"] <= row["beta"] <= row["beta_hat"] <= 0.0


def test_beta_refused_below_critical(capsys):
    assert main(["beta", "--preset", "fisher", "--c", "1.5"]) == 3


def test_beta_sweep(tmp_path, capsys):
    code, rep = run(capsys, "beta", "--preset", "remark_6_2", "--sweep", "1:5:9", "--c-star", "0",
                    "--jobs", "2", "--out", str(tmp_path))
    assert code == 0
    assert len(rep["results"]) == 9
    assert rep["strictly_decreasing"] is True
    with open(tmp_path / "beta.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["c", "beta", "beta_hat", "floor"] and len(rows) == 10
    assert float(rows[1][1]) == rep["results"][0]["beta"]


def test_bad_sweep_is_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["beta", "--preset", "remark_6_2", "--sweep", "1:5"])


# ------------------------------------------------------------ zsolve / profile

def test_zsolve_csv_precision(tmp_path, capsys):
    code, rep = run(capsys, "zsolve", "--preset", "remark_6_2", "--c", "0", "--out", str(tmp_path))
    assert code == 0
    assert rep["shot"]["terminal"] in ("reached_target_end", "z_hit_zero_at")
    with open(tmp_path / "z.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    digits = max(len(r[1].lstrip("-").replace(".", "").split("e")[0].lstrip("0")) for r in rows)
    assert digits >= 16


def test_zsolve_forward_refusal(capsys):
    assert main(["zsolve", "--preset", "counterexample_6_2b", "--c", "0",
                 "--forward", "s_plus"]) == 3


def test_zsolve_missing_derivative_refused(capsys):
    assert main(["zsolve", "--preset", "oscillatory_7_2", "--c", "0"]) == 3


def test_zsolve_step_budget_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "DEFAULT_CONFIG", IntegratorConfig(max_steps=5))
    code, rep = run(capsys, "zsolve", "--preset", "fisher", "--c", "3")
    assert code == 4
    assert rep["shot"]["terminal"] == "step_budget_exhausted_at"


def test_profile_sharp(tmp_path, capsys):
    code, rep = run(capsys, "profile", "--preset", "remark_9_3_model1", "--c", "0", "--b", "0",
                    "--out", str(tmp_path))
    assert code == 0
    cls = rep["classification"]
    assert cls["kind_at_zero"] == "sharp"
    assert abs(cls["endpoints"]["xi0"] - math.log(2.0)) <= 1e-6
    assert (tmp_path / "profile.csv").exists()


def test_profile_classical(capsys):
    code, rep = run(capsys, "profile", "--preset", "remark_9_3_model2", "--c", "0", "--b", "0")
    assert code == 0
    assert rep["classification"]["kind_at_zero"] == "classical"
    assert rep["classification"]["endpoints"]["xi0"] == "+inf"


def test_profile_semi_wavefront(capsys):
    code, rep = run(capsys, "profile", "--preset", "remark_6_2", "--c", "1", "--b", "-0.1")
    assert code == 0
    cls = rep["classification"]
    assert isinstance(cls["endpoints"]["a"], float)
    assert cls["slopes"]["at_a"] == "-inf"


def test_profile_subcritical_refused(capsys):
    assert main(["profile", "--preset", "fisher", "--c", "1"]) == 3


# ------------------------------------------------------------ oracle / presets

def test_oracle_analytic(capsys):
    code, rep = run(capsys, "oracle", "--suite", "analytic")
    assert code == 0 and rep["ok"]


def test_oracle_regression(capsys):
    code, rep = run(capsys, "oracle", "--suite", "regression")
    assert code == 0 and rep["ok"]


def test_oracle_properties_small(capsys):
    code, rep = run(capsys, "oracle", "--suite", "properties", "--corpus", "3", "--seed", "5")
    assert code == 0 and rep["ok"]


def test_presets_listing(capsys):
    code, rep = run(capsys, "presets")
    assert code == 0
    assert {p["name"] for p in rep["presets"]} >= {"fisher", "remark_6_2"}


def test_report_is_deterministic(capsys):
    _, a = run(capsys, "cstar", "--preset", "fisher")
    _, b = run(capsys, "cstar", "--preset", "fisher")
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    assert a["command"] == "cstar" and "kernel_backend" in a


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "frontwave", "presets"], capture_output=True,
                         text=True, cwd="/")
    assert out.returncode == 0
    assert "fisher" in out.stdout
