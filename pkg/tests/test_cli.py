"""End-to-end command-line behavior: parsing, exit codes, files on disk."""

import json
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from plapx.cli import (
    config_signature,
    dispatch,
    emit_config,
    parse_config,
    parse_config_text,
)
from plapx.errors import ConfigurationError

SADDLE_INI = textwrap.dedent("""\
    [domain]
    dimension = 1
    extent_x = 0, 1
    cells_x = 32

    [exponent]
    p = 2

    [potential]
    kind = pieces
    piece.1 = -inf ; -1 ; t^4
    piece.2 = -1 ; 1 ; t^2
    piece.3 = 1 ; inf ; t^4

    [lambda]
    value = 0.0

    [solver]
    route = mp
    path_points = 16
    sphere_samples = 60
    probe_count = 200
    multistart = 4
    seed = 0
""")

COERCIVE_INI = textwrap.dedent("""\
    [domain]
    dimension = 1
    extent_x = 0, 1
    cells_x = 32

    [exponent]
    p = 3

    [potential]
    kind = expression
    expr = -5*abs(t)^5
    mu = 4.9
    r = 5

    [solver]
    route = min
    probe_count = 200
    multistart = 4
    seed = 0
""")

J1_INI = textwrap.dedent("""\
    [domain]
    dimension = 1
    extent_x = 0, 1
    cells_x = 32

    [exponent]
    p = 3

    [potential]
    kind = j1
    nu = 1.0
    h = 2
    r_plus = 5.0

    [lambda]
    value = 0.0

    [solver]
    route = mp
    seed = 0
""")


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(argv):
    return dispatch(argv)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_parse_round_trip(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    config = parse_config(path)
    text = emit_config(config)
    again = parse_config_text(text)
    assert config_signature(config) == config_signature(again)
    # emitting is idempotent
    assert emit_config(again) == text


def test_parse_reports_unknown_key_with_line(tmp_path):
    bad = SADDLE_INI.replace("path_points = 16", "path_pionts = 16")
    path = _write(tmp_path, "typo.ini", bad)
    with pytest.raises(ConfigurationError) as err:
        parse_config(path)
    msg = str(err.value)
    assert "path_pionts" in msg
    assert "line" in msg


def test_parse_rejects_growth_ordering(tmp_path):
    # min r must exceed max p; a tail exponent at p+ = 3 breaks the ordering
    text = J1_INI.replace("r_plus = 5.0", "r_plus = 3.0")
    path = _write(tmp_path, "order.ini", text)
    with pytest.raises(ConfigurationError, match="growth ordering"):
        parse_config(path)


def test_parse_warns_at_lambda_cap(tmp_path):
    # nu * min p = 1 * 3 = 3, so value = 3.0 sits exactly at the cap
    text = J1_INI.replace("value = 0.0", "value = 3.0")
    path = _write(tmp_path, "cap.ini", text)
    config = parse_config(path)
    assert any("open" in w for w in config.echo["warnings"])


def test_overrides_reach_config(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    config = parse_config(path, overrides=("solver.seed=7",
                                           "lambda.value=0.25"))
    assert config.params.seed == 7
    assert config.lam == 0.25


def test_bad_override_is_configuration_error(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    with pytest.raises(ConfigurationError):
        parse_config(path, overrides=("solver.rho=2.0",))


# ---------------------------------------------------------------------------
# subcommands end to end (in-process dispatch)
# ---------------------------------------------------------------------------

def test_solve_mp_writes_outputs_and_exits_zero(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    out = tmp_path / "run"
    code = _run(["solve", "--config", path, "--out", str(out), "--history"])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["converged"] is True
    assert result["route"] == "mountain_pass"
    assert result["critical_value"] > 0.0
    assert "timing" not in result  # timing lives in the manifest
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert "wall_time" in manifest["timing"]
    for name in manifest["outputs"]:
        assert (out / name).exists()
    assert "history.csv" in manifest["outputs"]
    assert (out / "solution.csv").read_text().startswith("x,u")


def test_solve_results_byte_identical_across_runs(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert _run(["solve", "--config", path, "--out", str(out1)]) == 0
    assert _run(["solve", "--config", path, "--out", str(out2)]) == 0
    assert (out1 / "result.json").read_bytes() == (out2 / "result.json").read_bytes()
    assert (out1 / "solution.csv").read_bytes() == (out2 / "solution.csv").read_bytes()


def test_solve_min_on_coercive_problem(tmp_path):
    path = _write(tmp_path, "well.ini", COERCIVE_INI)
    out = tmp_path / "run"
    code = _run(["solve", "--config", path, "--out", str(out)])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["route"] == "global_min"
    assert abs(result["critical_value"]) <= 1e-6
    assert result["probe"]["certified"] is True
    assert result["hypothesis_stamps"]["tail-negativity"]["passed"] is True


def test_solve_mp_on_coercive_problem_fails_honestly(tmp_path):
    # no negative-energy endpoint exists: reported failure, exit 1
    path = _write(tmp_path, "well.ini", COERCIVE_INI)
    out = tmp_path / "run"
    code = _run(["solve", "--config", path, "--out", str(out),
                 "--route", "mp"])
    assert code == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert "anticoercivity" in manifest["error"].lower() or \
        "nonnegative" in manifest["error"]


def test_route_override_flag(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    out = tmp_path / "run"
    code = _run(["solve", "--config", path, "--out", str(out),
                 "--route", "min"])
    # the saddle potential is anticoercive: descent hits the guard, exit 1
    assert code == 1


def test_geometry_subcommand(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    out = tmp_path / "geo"
    code = _run(["geometry", "--config", path, "--out", str(out),
                 "--rho", "0.1,0.3"])
    assert code == 0
    report = json.loads((out / "geometry.json").read_text())
    assert report["passed"] is True
    assert len(report["rho_sweep"]) == 2
    assert {r["rho"] for r in report["rho_sweep"]} == {0.1, 0.3}
    assert all(r["eta_hat"] > 0 for r in report["rho_sweep"])
    assert report["endpoint"]["R"] < 0


def test_check_potential_subcommand(tmp_path):
    path = _write(tmp_path, "well.ini", COERCIVE_INI)
    out = tmp_path / "checks"
    code = _run(["check-potential", "--config", path, "--out", str(out)])
    assert code == 0
    report = json.loads((out / "potential_report.json").read_text())
    assert report["passed"] is True
    assert report["stamps"]["tail-negativity"]["passed"] is True


def test_check_potential_fails_on_bad_constant(tmp_path):
    text = COERCIVE_INI.replace("mu = 4.9", "mu = 5.1")
    path = _write(tmp_path, "bad.ini", text)
    out = tmp_path / "checks"
    code = _run(["check-potential", "--config", path, "--out", str(out)])
    assert code == 1
    report = json.loads((out / "potential_report.json").read_text())
    assert report["passed"] is False


def test_verify_lemmas_subcommand(tmp_path):
    out = tmp_path / "lemmas"
    code = _run(["verify-lemmas", "--out", str(out), "--seed", "3",
                 "--samples", "40"])
    assert code == 0
    report = json.loads((out / "lemma_report.json").read_text())
    assert report["passed"] is True
    assert report["samples"] == 40
    assert report["seed"] == 3
    for block in ("norm_modular", "sobolev_modular", "holder", "poincare",
                  "sequences"):
        assert report[block]["passed"] is True


def test_verify_lemmas_accepts_config(tmp_path):
    path = _write(tmp_path, "saddle.ini", SADDLE_INI)
    out = tmp_path / "lemmas"
    code = _run(["verify-lemmas", "--config", path, "--out", str(out),
                 "--samples", "30"])
    assert code == 0
    report = json.loads((out / "lemma_report.json").read_text())
    assert report["exponent"]["p_minus"] == 2.0


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_missing_config_file_is_exit_two(tmp_path):
    assert _run(["solve", "--config", str(tmp_path / "nope.ini"),
                 "--out", str(tmp_path / "o")]) == 2


def test_malformed_config_is_exit_two(tmp_path):
    path = _write(tmp_path, "bad.ini", "[domain]\ndimension = 7\n")
    assert _run(["solve", "--config", path,
                 "--out", str(tmp_path / "o")]) == 2


def test_unknown_subcommand_is_exit_two():
    assert _run(["frobnicate"]) == 2


def test_console_entry_point_runs():
    out = subprocess.run(
        [sys.executable, "-m", "plapx.cli", "--help"],
        capture_output=True, text=True,
        env={**os.environ, "PLAPX_BACKEND": "numpy"})
    assert out.returncode == 0
    for sub in ("solve", "geometry", "check-potential", "verify-lemmas"):
        assert sub in out.stdout
