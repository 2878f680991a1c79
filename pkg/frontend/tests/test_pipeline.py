"""Pipeline artifacts: plots from real simulator output.

The simulator is exercised through its CLI in a subprocess, so this
package still never imports it; skipped when the CLI is not installed.
"""
import json
import shutil
import subprocess

import numpy as np
import pytest

from achesim_report.plots import plot_decay, plot_fields

pytestmark = pytest.mark.skipif(shutil.which("achesim") is None,
                                reason="achesim CLI not installed")


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = out / "run.cfg"
    cfg.write_text(
        "mode = simulate\n"
        "solver.mu = 1e-2\nsolver.nu = 1e-2\n"
        "solver.nx = 32\nsolver.ny = 32\n"
        "solver.dt = 2e-3\nsolver.t_end = 2.0\n"
        "solver.series_stride = 10\nsolver.snapshot_stride = 250\n"
        f"output_dir = {out}\n"
    )
    subprocess.run(["achesim", "simulate", "-c", str(cfg)], check=True,
                   capture_output=True)
    return out


def test_plot_decay_from_real_run(run_dir):
    out = plot_decay(run_dir)
    assert out.exists() and out.stat().st_size > 0
    with open(f"{out}.json") as fh:
        ann = json.load(fh)
    # re-derive the annotated fit from the CSV alone
    rows = np.genfromtxt(run_dir / "series.csv", delimiter=",", names=True)
    keep = rows["norm_perp_L2"] > 0
    slope = np.polyfit(rows["t"][keep],
                       np.log(rows["norm_perp_L2"][keep]), 1)[0]
    assert abs(ann["fitted_rate"] - (-slope)) <= 1e-6


def test_plot_fields_from_real_run(run_dir):
    out = plot_fields(run_dir, stride=2)
    assert out.exists() and out.stat().st_size > 0
    with open(f"{out}.json") as fh:
        ann = json.load(fh)
    assert ann["vmin"] < ann["vmax"]
    assert ann["times"] == sorted(ann["times"])
