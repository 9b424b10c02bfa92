"""Tests for the command-line driver: dispatch, config handling, exit codes,
output determinism."""

import json
import os
from pathlib import Path

import pytest

from motility import cli

CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "fig1.toml")


def run(argv):
    return cli.main(argv)


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text('zeta = 3.0\nwhatever = 1.0\n')
        code = run(["stationary", "--config", str(bad)])
        assert code == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_invalid_toml(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("zeta = = 3\n")
        code = run(["stationary", "--config", str(bad)])
        assert code == 1
        assert "invalid TOML" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        code = run(["stationary", "--config", "/nonexistent/x.toml"])
        assert code == 1

    def test_missing_model_params(self, capsys):
        code = run(["stationary", "--r", "3.6"])
        assert code == 1
        assert "missing model parameter" in capsys.readouterr().err

    def test_flag_overrides_config(self, capsys):
        code = run(["stationary", "--config", CONFIG, "--r", "3.0"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert float(payload["radial_state"]["R"]) == 3.0

    def test_raw_parameter_route(self, capsys):
        code = run([
            "stationary", "--zeta", "3.0", "--gamma", "2.0", "--k-e", "4.0",
            "--p-h", "1.5", "--area-ref", "30.0", "--r", "3.0",
        ])
        assert code == 0
        json.loads(capsys.readouterr().out)


class TestDispatch:
    def test_unknown_subcommand(self, capsys):
        assert run(["nonsense"]) == 1

    def test_unknown_flag(self, capsys):
        assert run(["tw", "--config", CONFIG, "--badflag", "1"]) == 1

    def test_stationary_json(self, capsys):
        assert run(["stationary", "--config", CONFIG]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["all_hold"] is True
        assert float(payload["radial_state"]["m0"]) == 0.62

    def test_bifurcate_json(self, capsys):
        assert run(["bifurcate", "--config", CONFIG]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(float(payload["R0"]) - 3.6) <= 1e-10


class TestTravelingWaveCommands:
    def test_tw_writes_both_csvs(self, tmp_path):
        shape = tmp_path / "shape.csv"
        myo = tmp_path / "myo.csv"
        code = run([
            "tw", "--config", CONFIG, "--v", "0.05", "--steps", "4",
            "--out-shape", str(shape), "--out-myosin", str(myo),
        ])
        assert code == 0
        assert shape.read_text().splitlines()[0] == "phi,rho,x,y"
        assert myo.read_text().splitlines()[0] == "x,y,m"

    def test_tw_numerical_failure(self, capsys):
        code = run(["tw", "--config", CONFIG, "--v", "1e9"])
        assert code == 2
        assert "branch continuation failed" in capsys.readouterr().err

    def test_tw_requires_velocity(self, capsys):
        assert run(["tw", "--config", CONFIG]) == 1

    def test_branch_csv(self, tmp_path):
        out = tmp_path / "branch.csv"
        code = run([
            "branch", "--config", CONFIG, "--v-max", "0.1", "--steps", "4",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "V,M,Lambda,rho0,rho2,area,newton_iters,residual"
        assert len(lines) == 6  # V = 0 plus 4 continuation steps + header

    def test_branch_requires_out(self, capsys):
        assert run(["branch", "--config", CONFIG, "--v-max", "0.1"]) == 1


class TestSpectrumCommand:
    def test_branch_spectrum_csv(self, tmp_path):
        out = tmp_path / "spec.csv"
        code = run([
            "spectrum", "--config", CONFIG, "--v-max", "0.1", "--steps", "8",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("V,re_lambda,im_lambda,lambda_asymptotic,ratio")
        assert len(lines) == 9  # header + 8 positive-V points
        for line in lines[1:]:
            re_lambda = float(line.split(",")[1])
            assert re_lambda < 0.0

    def test_bad_subspace(self, capsys):
        assert run([
            "spectrum", "--config", CONFIG, "--v-max", "0.1",
            "--subspace", "odd",
        ]) == 1


class TestDeterminism:
    def test_bifurcate_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["bifurcate", "--config", CONFIG, "--out", str(a)]) == 0
        assert run(["bifurcate", "--config", CONFIG, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sweep_byte_identical_across_thread_counts(self, tmp_path, monkeypatch):
        outs = []
        for name, threads in (("a.csv", "1"), ("b.csv", "4")):
            monkeypatch.setenv("MOTILITY_THREADS", threads)
            out = tmp_path / name
            code = run([
                "sweep-e", "--config", CONFIG, "--r-min", "3.5",
                "--r-max", "3.7", "--n-sweep", "3", "--out", str(out),
            ])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_sweep_requires_out(self, capsys):
        assert run([
            "sweep-e", "--config", CONFIG, "--r-min", "3.5", "--r-max", "3.7",
        ]) == 1
