import csv
import subprocess
import sys

import numpy as np

from armaxdesign.cli import main

SMALL = ["--runs", "2", "--steps", "800"]


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", *SMALL, "-o", str(out)]) == 0
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header == "t,mean_abs_delta,mse,violation_rate,mean_d,var_d"
    assert (out / "trajectory_1.csv").exists() and (out / "trajectory_2.csv").exists()
    assert "final_mse=" in (out / "summary.txt").read_text()


def test_spectrum_from_trajectories(tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", *SMALL, "--policy", "prbs", "-o", str(out)])
    capsys.readouterr()
    assert main(["spectrum", str(out / "trajectory_1.csv"), "--segment", "256"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["freq_hz", "power", "yd_max"]
    assert float(rows[-1][0]) == 50.0
    assert main(["spectrum", str(out / "trajectory_1.csv"), "--segment", "1024"]) == 1


def test_sweep(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", *SMALL, "--yd-max", "0.1,inf", "--no-trajectories", "-o", str(out)]) == 0
    for sub in ("yd_max_0.1", "yd_max_inf", "prbs"):
        assert (out / sub / "metrics.csv").exists()
    with open(out / "spectrum.csv") as fh:
        labels = {row["yd_max"] for row in csv.DictReader(fh)}
    assert labels == {"0.1", "inf", "prbs"}
    assert len((out / "summary.txt").read_text().splitlines()) == 3
    assert (out / "response.csv").exists()


def test_sensitivity_dump(capsys):
    assert main(["sensitivity", "-k", "5"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    g = [float(r[2]) for r in rows if r[0] == "g"]
    assert len(g) == 5 and g[0] == 0.57
    assert ["stable", "", "true"] in rows


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("no_such_key = 1\n")
    assert main(["run", "-c", str(bad)]) == 2
    assert main(["run", "-c", str(tmp_path / "missing.ini")]) == 2


def test_diverged_exit_code(tmp_path):
    cfg = tmp_path / "hot.ini"
    cfg.write_text("l = 5, 5\npolicy = zero\n")
    assert main(["run", "-c", str(cfg), *SMALL, "-o", str(tmp_path / "o")]) == 3


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "armaxdesign", "sensitivity", "-k", "2"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("quantity,index,value")
