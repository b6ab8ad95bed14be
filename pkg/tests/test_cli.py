import json

import pytest
from click.testing import CliRunner

from relgrowth.cli import main


def write(tmp_path, **sections):
    cfg = {"schema_version": 1, **sections}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


TORUS = {"dim": 2, "F": {"name": "euclidean_norm"}}


@pytest.fixture
def runner():
    return CliRunner()


def test_rot_translation(runner, tmp_path):
    cfg = write(tmp_path, model="circle", circle={"f": {"translation": 0.7}, "n_iter": 1000})
    res = runner.invoke(main, ["rot", "--config", cfg, "--out", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    assert "rot[f] = 0.7 ± 0.001" in res.output
    saved = json.loads((tmp_path / "out" / "rot.json").read_text())
    assert saved["f"]["value"] == 0.7


def test_gamma_torus_default_config(runner, tmp_path):
    res = runner.invoke(main, ["gamma-torus", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "gamma_closed_form = 1.5" in res.output
    header = (tmp_path / "gamma_torus.csv").read_text().splitlines()[0]
    assert header == "p1,p2,F,G,ratio"


def test_gamma_torus_scaling(runner, tmp_path):
    cfg = write(tmp_path, model="torus", torus={
        "dim": 2, "F": {"name": "euclidean_norm"},
        "G": {"name": "affine", "terms": [{"c": 2.0, "of": {"name": "euclidean_norm"}}]}})
    res = runner.invoke(main, ["gamma-torus", "--config", cfg])
    assert res.exit_code == 0, res.output
    assert "gamma = 2 in" in res.output
    assert "kappa = " in res.output


def test_gamma_circle_writes_sequence(runner, tmp_path):
    cfg = write(tmp_path, model="circle", circle={
        "f": {"translation": 1.0}, "g": {"translation": 0.5}, "n_iter": 1000, "K": 6})
    res = runner.invoke(main, ["gamma-circle", "--config", cfg, "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    rows = (tmp_path / "gamma_circle.csv").read_text().splitlines()
    assert rows[0] == "k,gamma_k,gamma_k_over_k"
    assert rows[3].split(",")[:2] == ["3", "2"]


def test_shape_outputs(runner, tmp_path):
    res = runner.invoke(main, ["shape", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "r_minus = 1 (exact)" in res.output
    assert "properties = pass" in res.output
    assert (tmp_path / "zk_embedding.csv").exists()


def test_stable_norm_and_beta(runner, tmp_path):
    cfg = write(tmp_path, model="metric", metric={"metric": {"name": "identity"}, "e": [1, 0], "K": 1, "R": 8})
    res = runner.invoke(main, ["stable-norm", "--config", cfg, "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert res.output.startswith("norm_primal = 1 ±")
    res = runner.invoke(main, ["beta", "--config", cfg])
    assert res.exit_code == 0 and res.output.startswith("beta = 0.5 ±")


def test_unknown_key_is_config_error(runner, tmp_path):
    cfg = write(tmp_path, model="circle", circle={"f": {"translation": 0.7}, "bogus": 1})
    assert runner.invoke(main, ["rot", "--config", cfg]).exit_code == 2


def test_slope_violation_is_config_error(runner, tmp_path):
    cfg = write(tmp_path, model="circle", circle={"f": {"arnold": {"a": 0.3, "b": 0.5}}})
    assert runner.invoke(main, ["rot", "--config", cfg]).exit_code == 2


def test_missing_config_file(runner, tmp_path):
    assert runner.invoke(main, ["rot", "--config", str(tmp_path / "none.json")]).exit_code == 2


def test_hypothesis_failure_exits_one(runner, tmp_path):
    cfg = write(tmp_path, model="torus", torus={
        "dim": 2, "F": {"name": "euclidean_norm"},
        "G": {"name": "affine", "terms": [{"c": -1.0, "of": {"name": "euclidean_norm"}}]}})
    res = runner.invoke(main, ["gamma-torus", "--config", cfg])
    assert res.exit_code == 1
    assert "HYPOTHESIS_FAILED" in res.output


def test_verify_subset_passes_and_writes_report(runner, tmp_path):
    cfg = write(tmp_path, model="torus", torus=TORUS, verify={"criteria": [4, 6, 7], "kappa_pairs": 3})
    res = runner.invoke(main, ["verify", "--config", cfg, "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["ok"] and [c["id"] for c in report["criteria"]] == [4, 6, 7]


def test_verify_impossible_tolerance_fails(runner, tmp_path):
    cfg = write(tmp_path, model="torus", torus=TORUS, verify={"criteria": [4], "torus_width": 1e-9})
    res = runner.invoke(main, ["verify", "--config", cfg])
    assert res.exit_code == 1
    assert "[FAIL]  4" in res.output
