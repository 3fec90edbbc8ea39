"""Command-line interface: run, sweep, validate, oracle."""

import subprocess
import sys

import pytest

CONFIG = """
[scenario]
protocol = tdfsa
nodes = 12
lambda = 0.5
w_min = 1
total_slots = 4000
warmup_slots = 500
seed = 99
replications = 1
"""

SWEEP_CONFIG = CONFIG + """
[sweep]
lambda = 0.3, 0.6
protocol = tdfsa, ideal_dfsa
"""


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "tdfsa.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=300,
    )


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "scenario.ini"
    path.write_text(CONFIG)
    return path


def test_run_writes_results_and_pmf(tmp_path, config_file):
    out = tmp_path / "out"
    proc = run_cli("run", "--config", str(config_file), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    results = (out / "results.csv").read_text()
    assert results.startswith("protocol,N,lambda,w_min,seed,")
    assert "tdfsa,12,0.5,1,99," in results
    assert (out / "frame_pmf.csv").read_text().startswith("frame_len,frequency")


def test_flag_overrides_config(tmp_path, config_file):
    out = tmp_path / "out"
    proc = run_cli(
        "run", "--config", str(config_file), "--out", str(out),
        "--nodes", "7", "--seed", "123",
    )
    assert proc.returncode == 0, proc.stderr
    assert "tdfsa,7,0.5,1,123," in (out / "results.csv").read_text()


def test_sweep_emits_one_row_per_point(tmp_path):
    config = tmp_path / "sweep.ini"
    config.write_text(SWEEP_CONFIG)
    out = tmp_path / "out"
    proc = run_cli("sweep", "--config", str(config), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    lines = (out / "results.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 4
    assert (out / "frame_pmf_0000.csv").exists()
    assert (out / "frame_pmf_0003.csv").exists()


def test_validate_accepts_good_and_rejects_bad(tmp_path, config_file):
    good = run_cli("validate", "--config", str(config_file))
    assert good.returncode == 0
    assert "config ok" in good.stdout

    bad = run_cli("validate", "--config", str(config_file), "--lambda", "0")
    assert bad.returncode == 1
    assert "lambda must be in (0,1]" in bad.stdout


def test_missing_config_file_is_reported(tmp_path):
    proc = run_cli("run", "--config", str(tmp_path / "nope.ini"))
    assert proc.returncode == 1
    assert "cannot read config" in proc.stderr


def test_oracle_quick_passes():
    proc = run_cli("oracle", "--quick")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.count("PASS") == 3
