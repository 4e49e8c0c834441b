import csv
import subprocess
import sys

import pytest

from _support import DeadLikelihood
from nestedpf.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, main
from nestedpf.harness import register_model

SMALL = ["--T", "5", "--runs", "2", "--n-x", "4", "--n-z", "3", "--n-x-prime", "2", "--n-z-prime", "2",
         "--record-wall-time", "false"]


def cli(*args):
    return subprocess.run([sys.executable, "-m", "nestedpf", *args], capture_output=True, text=True)


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("T: 5\nruns: 2\nn_x: 4\nn_z: 3\nn_x_prime: 2\nn_z_prime: 2\nrecord_wall_time: false\n",
                    encoding="utf-8")
    return path


@pytest.mark.parametrize("command, header", [
    ("run", "algorithm,n_x,n_z,run,component,rmse"),
    ("compare", "algorithm,n_x,n_z,run,component,rmse"),
    ("bandit", "run,t,p0,p1"),
    ("oracle-check", "algorithm,n_total,run,component,error"),
])
def test_subcommands(tmp_path, config, command, header):
    out = tmp_path / f"{command}.csv"
    extra = {"compare": ["--grid", "[[2, 2]]"], "oracle-check": ["--oracle-totals", "[20]", "--oracle-n-z", "4"]}
    proc = cli(command, "--config", str(config), "--seed", "3", "--out", str(out), "--threads", "2",
               *extra.get(command, []))
    assert proc.returncode == EXIT_OK, proc.stderr
    text = out.read_text(encoding="utf-8")
    assert text.startswith(header)
    assert out.with_name(f"{command}.summary.csv").exists()


def test_seed_flag_reproduces(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", *SMALL, "--seed", "4", "--out", str(a)]) == EXIT_OK
    assert main(["run", *SMALL, "--seed", "4", "--out", str(b), "--threads", "2"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_flags_override_file(tmp_path, config):
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(config), "--n-x", "6", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open(encoding="utf-8")))
    assert {r["n_x"] for r in rows} == {"6"} and {r["n_z"] for r in rows} == {"3"}


@pytest.mark.parametrize("args", [
    ["run", "--n-x", "0"],
    ["run", "--algorithm", "kf"],
    ["compare", "--grid", "[[1, 2"],
    ["run", "--config", "/nonexistent/cfg.yaml"],
])
def test_config_errors_exit_2(args):
    assert main(args + ["--T", "2", "--runs", "1"]) == EXIT_CONFIG


def test_config_error_exit_code_from_process(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("n_particles: 3\n", encoding="utf-8")
    proc = cli("run", "--config", str(bad))
    assert proc.returncode == EXIT_CONFIG
    assert "n_particles" in proc.stderr


def test_all_diverged_exit_3(capsys):
    register_model("dead_cli", DeadLikelihood)
    assert main(["run", "--model", "dead_cli", "--T", "3", "--runs", "2", "--n-x", "1", "--n-z", "1"]) == EXIT_DIVERGED
    assert "diverged" in capsys.readouterr().err
