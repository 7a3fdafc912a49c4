import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from salvage.cli import EXIT_CONFIG, EXIT_LINK, EXIT_NUMERIC, EXIT_OK, EXIT_VIOLATED, run
from salvage.errors import ConfigError
from salvage.problem import GALLERY_NAMES, gallery, load_problem, problem_from_dict


def write(tmp_path, data, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(path)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_load_problem_examples(tmp_path):
    spec = load_problem(write(tmp_path, {"domain": [0, 3], "omega": "x - 1", "g_prime": "2"}))
    assert spec.name == "p" and spec.omega(2.0) == 1.0 and spec.g_prime(0.3) == 2.0
    assert not spec.truncated
    spec = load_problem(write(tmp_path, {
        "domain": ["-inf", "inf"], "omega": "(1 + z*x)*phi(x)", "g_prime": "x^2", "params": {"z": 2},
    }))
    assert spec.truncated and spec.domain.lo <= -10 and spec.domain.hi >= 10


def test_g_is_differentiated_when_g_prime_missing():
    spec = problem_from_dict({"domain": [0, 3], "omega": "x - 1", "g": "x^2"})
    assert spec.g_prime(1.5) == 3.0


def test_inconsistent_g_and_g_prime_warn():
    spec = problem_from_dict({"domain": [0, 3], "omega": "x - 1", "g": "x^2", "g_prime": "2"})
    assert spec.warnings and "disagree" in spec.warnings[0]
    assert not gallery("example1").warnings


def test_tolerances_from_file():
    spec = problem_from_dict({
        "domain": [0, 1], "omega": "x", "g_prime": "1",
        "tolerances": {"quad_tol": 1e-8, "n_schedule": [8, 16]},
    })
    assert spec.tolerances.quad_tol == 1e-8 and spec.tolerances.n_schedule == (8, 16)
    assert spec.tolerances.rel_tol == 1e-9


@pytest.mark.parametrize(
    "data, fragment",
    [
        ({"omega": "x", "g_prime": "1"}, "'domain' is a required property"),
        ({"domain": [0, 1], "omega": "x"}, "either 'g_prime' or 'g'"),
        ({"domain": [0, 1], "omega": "x", "g_prime": "1", "bins": 3}, "Additional properties"),
        ({"domain": [0, 1], "omega": [{"interval": [0, 1]}], "g_prime": "1"}, "omega[0]"),
        ({"domain": [0, 1], "omega": "x", "g_prime": "1", "tolerances": {"quad_tol": -1}}, "tolerances.quad_tol"),
        ({"domain": [1, 0], "omega": "x", "g_prime": "1"}, "must be below"),
        ({"domain": [0, 1], "omega": "x +", "g_prime": "1"}, "omega:"),
        ({"domain": [0, 2], "omega": [{"interval": [0, 1], "expr": "x"}], "g_prime": "1"}, "not defined on"),
        ({"domain": [0, 1], "omega": "z*x", "g_prime": "1"}, "unbound parameter"),
    ],
)
def test_schema_errors_name_the_field(data, fragment):
    with pytest.raises(ConfigError) as info:
        problem_from_dict(data)
    assert fragment in str(info.value)


def test_gallery_fixtures_load():
    for name in GALLERY_NAMES:
        assert gallery(name).name == name
    assert gallery("gaussian", z=-2).params["z"] == -2.0
    with pytest.raises(ConfigError):
        gallery("nope")


def test_gallery_first_example(capsys):
    code, rep = call(capsys, "gallery", "example1")
    assert code == EXIT_OK and rep["exit_code"] == 0
    assert rep["beta_original"] == pytest.approx(3.0, abs=1e-9)
    assert rep["beta_transformed"] == pytest.approx(3.0, abs=1e-9)
    cond = rep["link_check"]["conditions"]
    assert set(cond) >= {"a1_sup_residual", "a2_min", "a3_integral", "a3_error", "a4_integral", "a4_error", "verdicts"}


def test_gallery_second_example(capsys):
    code, rep = call(capsys, "gallery", "example2")
    assert code == EXIT_LINK
    kinds = {f["kind"] for f in rep["link_check"]["findings"]}
    assert {"not_injective", "image_escape"} <= kinds
    cond = rep["link_check"]["conditions"]
    assert cond["a3_integral"] == pytest.approx(2 / 105, abs=1e-10)
    assert abs(cond["a4_integral"]) <= 1e-10


def test_exit_codes(capsys, tmp_path):
    assert call(capsys, "analyze", "--problem", write(tmp_path, {"domain": [-3, 3], "omega": "phi(x)", "g_prime": "1"}))[0] == EXIT_OK
    code, rep = call(capsys, "analyze", "--problem", write(tmp_path, {"domain": [-3, 3], "omega": "phi(x)", "g_prime": "1"}))
    assert rep["partition"]["x_minus"] == []
    violated = write(tmp_path, {"domain": [0, 3], "omega": "x - 1", "g_prime": "x"}, "v.json")
    assert call(capsys, "salvage", violated, "--bins", "16", "--schedule", "16")[0] == EXIT_VIOLATED
    assert call(capsys, "link-check", "example2")[0] == EXIT_LINK
    assert call(capsys, "link-check", "example2", "--branch", "1")[0] == EXIT_LINK
    assert call(capsys, "link-check", "constant_effect")[0] == EXIT_CONFIG
    assert call(capsys, "analyze", "--problem", str(tmp_path / "missing.json"))[0] == EXIT_CONFIG
    assert call(capsys, "analyze", "--problem", write(tmp_path, "{not json", "bad.json"))[0] == EXIT_CONFIG
    assert call(capsys, "analyze", "no_such_fixture")[0] == EXIT_CONFIG
    numeric = write(tmp_path, {"domain": [-1, 1], "omega": "log(x)", "g_prime": "1"}, "n.json")
    code, rep = call(capsys, "analyze", numeric)
    assert code == EXIT_NUMERIC and rep["error_type"] == "EvaluationError"


def test_argument_errors_exit_nonzero(capsys):
    with pytest.raises(SystemExit) as info:
        run(["salvage", "example1", "--schedule", "a,b"])
    assert info.value.code != 0
    assert call(capsys, "salvage", "example1", "--schedule", "64,32")[0] == EXIT_CONFIG


def test_salvage_and_adversary_reports(capsys):
    code, rep = call(capsys, "salvage", "constant_effect", "--schedule", "4,8", "--bins", "8")
    assert code == EXIT_OK and rep["dominance"]["verdict"] == "dominated"
    assert [r["n"] for r in rep["refinement"]] == [4, 8]
    code, rep = call(capsys, "adversary", "example1")
    adv = rep["adversary"]
    assert code == EXIT_OK
    assert set(adv) == {"center", "half_width", "epsilon", "amplitude", "achieved_beta"}
    assert adv["achieved_beta"] < 0 and rep["g_prime_grid_min"] >= 0.01
    code, rep = call(capsys, "adversary", "--problem", "/dev/null")
    assert code == EXIT_CONFIG


def test_out_directory_tables(capsys, tmp_path):
    out = tmp_path / "out"
    code, rep = call(capsys, "gallery", "gaussian", "--schedule", "16,32", "--bins", "32", "--out", str(out))
    assert code == EXIT_OK
    assert json.loads((out / "report.json").read_text()) == rep
    with open(out / "samples.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "omega", "omega_tilde", "g_prime"] and len(rows) == 2049
    with open(out / "bins.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["bin_lo", "bin_hi", "mu_minus", "mu_plus", "leb_plus", "omega_tilde_value", "violated"]
    assert (out / "refinement.csv").exists()


def test_output_is_deterministic(capsys):
    first = call(capsys, "salvage", "gaussian", "--schedule", "16,32", "--bins", "16")[1]
    second = call(capsys, "salvage", "gaussian", "--schedule", "16,32", "--bins", "16")[1]
    assert json.dumps(first) == json.dumps(second)


def test_gaussian_sign_parameter(capsys):
    code, rep = call(capsys, "analyze", "gaussian", "--z", "-2")
    assert code == EXIT_OK and rep["problem"]["params"]["z"] == -2.0
    # the odd moment vanishes, so the estimand is E[x^2] for either sign
    assert rep["beta_original"] == pytest.approx(1.0, abs=1e-6)


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "salvage", "analyze", "example1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["beta_original"] == pytest.approx(3.0, abs=1e-9)
