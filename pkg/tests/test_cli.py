import json
import os

import pytest

from nqlap.cli import main


def run_cli(args):
    return main(args)


def test_regime_prints_classification(tmp_path, capsys):
    code = run_cli(["regime", "--N", "2", "--q", "3", "--p", "4", "--b", "0.5",
                    "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "SubcriticalHigh" in out
    payload = json.loads((tmp_path / "regime.json").read_text())
    assert payload["tag"] == "SubcriticalHigh"
    assert "config_hash" in payload


def test_c2star_gate_exits_with_validation_code(tmp_path, capsys):
    code = run_cli(["c2star", "--N", "2", "--q", "3", "--p", "4", "--b", "0.5",
                    "--n", "512", "--out", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["type"] == "InvalidRegime"


def test_bad_parameters_exit_2(tmp_path, capsys):
    code = run_cli(["regime", "--N", "3", "--q", "3", "--p", "4", "--b", "2.5",
                    "--out", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["type"] == "BOutOfRange"


def test_mass_curve_rows_and_determinism(tmp_path, capsys):
    args = ["mass-curve", "--N", "2", "--q", "3", "--p", "3", "--b", "0.5",
            "--n", "512", "--R", "30", "--max-iters", "800",
            "--c-list", "2,3,4,6,8,12,16,24"]
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    b1 = (out1 / "mass_curve.csv").read_bytes()
    b2 = (out2 / "mass_curve.csv").read_bytes()
    assert b1 == b2
    lines = b1.decode().strip().split("\n")
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "c,m,status,lambda,pohozaev_residual,iters"
    assert len(lines) == 2 + 8


def test_mass_curve_worker_count_invariance(tmp_path):
    args = ["mass-curve", "--N", "2", "--q", "3", "--p", "3", "--b", "0.5",
            "--n", "256", "--R", "30", "--max-iters", "400",
            "--c-list", "2,4,8"]
    out1 = tmp_path / "w1"
    out2 = tmp_path / "w2"
    assert run_cli(args + ["--workers", "1", "--out", str(out1)]) == 0
    assert run_cli(args + ["--workers", "2", "--out", str(out2)]) == 0
    rows1 = (out1 / "mass_curve.csv").read_text().strip().split("\n")[2:]
    rows2 = (out2 / "mass_curve.csv").read_text().strip().split("\n")[2:]
    assert rows1 == rows2


def test_gn_and_verify_round_trip(tmp_path, capsys):
    gn_args = ["gn", "--N", "2", "--q", "3", "--p", "4", "--b", "0.5",
               "--n", "1024", "--restarts", "1", "--skip-shooting",
               "--out", str(tmp_path)]
    assert run_cli(gn_args) == 0
    payload = json.loads((tmp_path / "gnresult.json").read_text())
    assert payload["K"] > 0
    assert (tmp_path / "Q.csv").exists()

    code = run_cli(["verify", str(tmp_path / "Q.csv"),
                    "--gn-json", str(tmp_path / "gnresult.json"),
                    "--n-samples", "20", "--out", str(tmp_path)])
    assert code == 0
    checks = json.loads((tmp_path / "verify.json").read_text())["checks"]
    names = {c["name"] for c in checks}
    assert "el_residual" in names and "gn_inequality" in names


def test_gn_determinism(tmp_path):
    args = ["gn", "--N", "2", "--q", "3", "--p", "4", "--b", "0.5",
            "--n", "512", "--restarts", "2", "--skip-shooting"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    assert (out1 / "gnresult.json").read_bytes() == (out2 / "gnresult.json").read_bytes()
    assert (out1 / "Q.csv").read_bytes() == (out2 / "Q.csv").read_bytes()


def test_out_dir_env_override(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NQ_OUT_DIR", str(tmp_path / "envout"))
    code = run_cli(["regime", "--N", "1", "--q", "2.5", "--p", "3", "--b", "0.5"])
    assert code == 0
    assert (tmp_path / "envout" / "regime.json").exists()


def test_gamma_curve_subcommand(tmp_path):
    args = ["gamma-curve", "--N", "3", "--q", "2.5", "--p", "3.75", "--b", "1",
            "--n", "512", "--max-iters", "400", "--c-list", "1,2",
            "--out", str(tmp_path)]
    assert run_cli(args) == 0
    lines = (tmp_path / "gamma_curve.csv").read_text().strip().split("\n")
    assert lines[1] == "c,gamma,lambda,pohozaev_residual,status,iters"
    assert len(lines) == 2 + 2
