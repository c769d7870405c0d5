# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import json
import math
import os

import pandas as pd
import pytest

from hill import cli, errors, verify


def _run(tmp_path, *argv):  # noqa: ANN001, ANN002, ANN202
    return cli.run([*argv, "--out", str(tmp_path), "--threads", "1"])


def _summary(tmp_path, command):  # noqa: ANN001, ANN202
    with open(os.path.join(tmp_path, f"{command}.json"), encoding="utf-8") as file:
        return json.load(file)


def test_parse_range():
    assert cli.parse_range("6..40") == (6, 40)
    assert cli.parse_range("7") == (7, 7)
    with pytest.raises(errors.BadParamError):
        cli.parse_range("a..b")
    with pytest.raises(errors.BadParamError):
        cli.parse_range("9..3")
    assert cli.parse_window("0.5..30") == (0.5, 30.0)
    with pytest.raises(errors.BadParamError):
        cli.parse_window("3..1")


def test_truncation_too_small(tmp_path, capsys):
    assert _run(tmp_path, "slate", "--builtin", "mathieu", "--K", "3") == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error == {"error": "TruncationTooSmall", "message": error["message"], "exit_code": 2}


def test_bad_boundary_condition(tmp_path, capsys):
    assert _run(tmp_path, "slate", "--bc", "per+,robin") == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "BadParam"


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"TRUNCATON": 32}', encoding="utf-8")
    assert _run(tmp_path, "slate", "-c", str(path)) == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "ValueError"


def test_slate_outputs(tmp_path):
    assert _run(tmp_path / "a", "slate", "--builtin", "mathieu", "--c", "1", "--K", "32", "--n", "6..12") == 0
    frame = pd.read_csv(tmp_path / "a" / "slate.csv")
    assert list(frame["n"]) == list(range(6, 13))
    summary = _summary(tmp_path / "a", "slate")
    assert summary["config"]["TRUNCATION"] == 32
    assert summary["config"]["N_MIN"] == 6
    assert "numpy" in summary["versions"]
    assert set(summary["localization"]) == {"per+", "per-", "dir", "neu"}
    assert _run(tmp_path / "b", "slate", "--builtin", "mathieu", "--c", "1", "--K", "32", "--n", "6..12") == 0
    assert (tmp_path / "a" / "slate.csv").read_bytes() == (tmp_path / "b" / "slate.csv").read_bytes()


def test_slate_dump_matrix(tmp_path):
    assert _run(tmp_path, "slate", "--K", "16", "--n", "6..7", "--bc", "dir", "--dump-matrix") == 0
    assert (tmp_path / "matrix_dir_K16.csv").is_file()


def test_beta(tmp_path):
    assert _run(tmp_path, "beta", "--builtin", "gasymov", "--s", "1", "--r", "0.5", "--F", "16", "--K", "32", "--n", "6..9") == 0
    frame = pd.read_csv(tmp_path / "beta.csv")
    assert (frame["case"] == "2b").all()
    assert (frame[["re_beta_minus", "im_beta_minus"]].abs() <= 1e-12).all().all()


def test_beta_reduced_roots(tmp_path):
    assert _run(tmp_path, "beta", "--builtin", "mathieu", "--c", "1", "--K", "16", "--n", "5..6") == 0
    frame = pd.read_csv(tmp_path / "beta.csv")
    assert list(frame["n"]) == [5, 6]
    assert (frame["reduced_root_error"] <= 1e-8).all()


def test_criterion_flags_basis_failure(tmp_path):
    assert _run(tmp_path, "criterion", "--builtin", "gasymov", "--F", "16", "--K", "32", "--n", "6..9") == 0
    summary = _summary(tmp_path, "criterion")
    assert summary["basis_fails"]
    assert summary["vacuous"]
    assert (tmp_path / "criterion_cases.csv").is_file()


def test_smoothness(tmp_path):
    assert _run(tmp_path, "smoothness", "--K", "32", "--n", "6..20") == 0
    plot = pd.read_csv(tmp_path / "smoothness_plot.csv")
    assert list(plot.columns) == ["n", "log10_gamma", "log10_delta_neu"]
    assert "gamma" in _summary(tmp_path, "smoothness")["classes"]


def test_projections(tmp_path):
    assert _run(tmp_path, "projections", "--K", "16", "--n", "6..8") == 0
    frame = pd.read_csv(tmp_path / "projections.csv")
    assert list(frame["n"]) == [6, 7, 8]
    assert frame["converged"].all()
    assert (tmp_path / "projections_bc.csv").is_file()
    assert "hs_bound" not in frame.columns
    others = pd.read_csv(tmp_path / "projections_bc.csv")
    assert set(others["bc"]) == {"dir", "neu"}
    assert (others["kvk_hs"] >= others["kvk_norm"]).all()
    assert (others["kvk_hs"] ** 2 <= others["hs_bound"] * (1 + 1e-9)).all()


def test_oracle(tmp_path):
    assert _run(tmp_path, "oracle", "--builtin", "zero", "--bc", "dir", "--window", "0.5..30.5") == 0
    roots = pd.read_csv(tmp_path / "oracle_roots.csv")
    assert roots["re"].tolist() == pytest.approx([1, 4, 9, 16, 25], abs=1e-8)
    summary = _summary(tmp_path, "oracle")
    assert summary["exact"]
    assert math.isnan(summary["magnus_step_order"])


def test_oracle_step_order(tmp_path):
    assert _run(tmp_path, "oracle", "--builtin", "mathieu", "--c", "1", "--bc", "dir", "--window", "10..20") == 0
    assert _summary(tmp_path, "oracle")["magnus_step_order"] >= 3.8


def test_verify_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(verify, "run_suite", lambda config: [verify.Check(1, "free operator exactness", False, "forced")])
    assert _run(tmp_path, "verify", "--quick") == 1
    frame = pd.read_csv(tmp_path / "verify.csv")
    assert not frame["passed"].any()
    assert _summary(tmp_path, "verify")["quick"]


@pytest.mark.slow
def test_verify_quick_passes(tmp_path):
    assert _run(tmp_path, "verify", "--quick") == 0
    assert pd.read_csv(tmp_path / "verify.csv")["passed"].all()
