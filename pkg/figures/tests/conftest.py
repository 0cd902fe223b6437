"""Golden CSVs for the figure tests, produced by the simulator CLI itself."""

import subprocess
import sys

import pytest

CONFIG = "sigma = 5\ngap_tolerance = 0.7\n"


def run_cli(*args):
    proc = subprocess.run([sys.executable, "-m", "qstirling.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def golden(tmp_path_factory):
    """Dict of CSV paths rendered from cheap simulator runs."""
    root = tmp_path_factory.mktemp("golden")
    conf = root / "run.conf"
    conf.write_text(CONFIG)
    sweep = root / "sweep_r.csv"
    run_cli("sweep-r", "--config", str(conf), "--out", str(sweep),
            "--r", "20 500 20000 200000")
    grid = root / "grid.csv"
    run_cli("contour", "--config", str(conf), "--out", str(grid),
            "--r", "20 200000", "--sigma", "4 5")
    return {"sweep_r": str(sweep), "contour": str(grid), "dir": root}
