"""Figure generation from simulator output files.

No physics is recomputed here: annotated numbers are either read directly
from the CSV/report files or are presentation-level line fits of the exact
data being plotted. Each figure gets a sidecar JSON file (figure path +
".json") recording every annotated number so they can be checked against
the source files.
"""
from __future__ import annotations

import json
import os
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from achesim_report.io import CsvFormatError, read_report, read_series, \
    read_snapshot, read_summary  # noqa: E402

plt.rcParams["svg.hashsalt"] = "achesim-report"


def _require(cols: dict, names: tuple[str, ...], path) -> None:
    for name in names:
        if name not in cols:
            raise CsvFormatError(f"{path}: missing required column {name!r}")


def _save(fig, out_path: Path, dpi: int, annotations: dict) -> Path:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # strip volatile metadata so byte-identical inputs give identical files
    if out_path.suffix == ".svg":
        fig.savefig(out_path, metadata={"Date": None})
    else:
        fig.savefig(out_path, dpi=dpi, metadata={"Software": None})
    plt.close(fig)
    with open(f"{out_path}.json", "w") as fh:
        json.dump(annotations, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_path


def _log_slope(t: np.ndarray, y: np.ndarray) -> float | None:
    """Least-squares slope of ln(y) against t over the positive samples."""
    keep = y > 0
    if np.count_nonzero(keep) < 2:
        return None
    return float(np.polyfit(t[keep], np.log(y[keep]), 1)[0])


def plot_decay(run_dir, out_dir=None, fmt: str = "png", dpi: int = 150) -> Path:
    """Semilog-y plot of the perpendicular norm with the theorem envelope.

    Reads series.csv (columns t, norm_perp_L2) and, when present,
    lambda_nu from report.txt to draw the 20*exp(-lambda*t/4) envelope.
    The annotated decay rate is a line fit of the plotted log-data.
    """
    run_dir = Path(run_dir)
    series_path = run_dir / "series.csv"
    cols = read_series(series_path)
    _require(cols, ("t", "norm_perp_L2"), series_path)
    t, perp = cols["t"], cols["norm_perp_L2"]

    lam = None
    report_path = run_dir / "report.txt"
    if report_path.exists():
        lam = read_report(report_path).get("lambda_nu")

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(t, np.where(perp > 0, perp, np.nan), "o-", ms=3,
                label=r"$\|c_{\not\sim}(t)\|_{L^2}$")
    annotations = {"source": str(series_path), "n_points": int(t.size)}
    if lam is not None:
        ax.semilogy(t, 20.0 * np.exp(-lam * t / 4.0), "k--",
                    label=rf"$20\,e^{{-\lambda_\nu t/4}}$, $\lambda_\nu={lam:.6g}$")
        annotations["lambda_nu"] = lam
        annotations["envelope_prefactor"] = 20.0
    slope = _log_slope(t, perp)
    if slope is not None:
        ax.annotate(f"fitted rate: {-slope:.6f}", xy=(0.02, 0.05),
                    xycoords="axes fraction")
        annotations["fitted_rate"] = -slope
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title("Decay of the non-shear-aligned component")
    ax.legend(loc="upper right")

    out_dir = Path(out_dir) if out_dir is not None else run_dir
    return _save(fig, out_dir / f"decay.{fmt}", dpi, annotations)


def plot_scaling(summary_path, out_dir=None, fmt: str = "png",
                 dpi: int = 150) -> Path:
    """Log-log plot of the measured rate lambda(nu) from a sweep summary.

    Requires at least three (nu, lambda) rows. The fitted line and its
    annotated exponent come straight from the CSV's delta0_fit and
    exponent_fit columns; the sidecar also records a presentation-level
    slope fit of the plotted points.
    """
    summary_path = Path(summary_path)
    rows = read_summary(summary_path)
    for name in ("nu", "lambda", "delta0_fit", "exponent_fit"):
        if name not in rows[0]:
            raise CsvFormatError(
                f"{summary_path}: missing required column {name!r}")
    if len(rows) < 3:
        raise CsvFormatError(
            f"{summary_path}: need at least 3 rows for a scaling plot, "
            f"got {len(rows)}")
    nu = np.array([r["nu"] for r in rows], dtype=float)
    lam = np.array([r["lambda"] for r in rows], dtype=float)
    delta0 = float(rows[0]["delta0_fit"])
    exponent = float(rows[0]["exponent_fit"])
    predicted = rows[0].get("exponent_predicted")
    predicted = float(predicted) if isinstance(predicted, float) else None

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(nu, lam, "o", label=r"measured $\lambda_\nu$")
    grid = np.geomspace(nu.min(), nu.max(), 64)
    ax.loglog(grid, delta0 * grid ** exponent, "-",
              label=f"fit: exponent {exponent:.6f}")
    annotations = {
        "source": str(summary_path),
        "n_points": int(nu.size),
        "delta0_fit": delta0,
        "exponent_fit": exponent,
        "scatter_slope": float(np.polyfit(np.log(nu), np.log(lam), 1)[0]),
    }
    if predicted is not None:
        anchor = lam[-1] * (grid / nu[-1]) ** predicted
        ax.loglog(grid, anchor, "k:", label=f"reference slope {predicted:.6g}")
        annotations["exponent_predicted"] = predicted
    ax.annotate(f"exponent_fit: {exponent:.6f}", xy=(0.02, 0.92),
                xycoords="axes fraction")
    ax.set_xlabel(r"$\nu$")
    ax.set_ylabel(r"$\lambda_\nu$")
    ax.set_title("Enhanced-dissipation rate scaling")
    ax.legend(loc="lower right")

    out_dir = Path(out_dir) if out_dir is not None else summary_path.parent
    return _save(fig, out_dir / f"scaling.{fmt}", dpi, annotations)


_SNAP_RE = re.compile(r"snap_(\d+)\.dat$")


def plot_fields(run_dir, stride: int = 1, out_dir=None, fmt: str = "png",
                dpi: int = 150) -> Path:
    """Heatmap sequence of saved snapshots on a shared color scale."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    snaps = sorted(p for p in os.listdir(run_dir) if _SNAP_RE.search(p))
    if not snaps and (run_dir / "snapshots").is_dir():
        run_dir = run_dir / "snapshots"
        snaps = sorted(p for p in os.listdir(run_dir) if _SNAP_RE.search(p))
    if not snaps:
        raise FileNotFoundError(f"{run_dir}: no snap_*.dat files")
    snaps = snaps[::stride]
    frames = [read_snapshot(run_dir / name) for name in snaps]

    vmin = min(float(values.min()) for values, *_ in frames)
    vmax = max(float(values.max()) for values, *_ in frames)
    if vmin == vmax:  # flat fields still need a nonempty color range
        vmin, vmax = vmin - 0.5, vmax + 0.5

    n = len(frames)
    ncols = min(n, 4)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                             figsize=(3.0 * ncols + 1.2, 3.0 * nrows))
    im = None
    times = []
    for k, (values, time, _mu, _nu) in enumerate(frames):
        ax = axes[k // ncols][k % ncols]
        im = ax.imshow(values, origin="lower", extent=(0, 1, 0, 1),
                       vmin=vmin, vmax=vmax, cmap="RdBu_r")
        ax.set_title(f"t = {time:.6g}")
        times.append(time)
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.colorbar(im, ax=axes, fraction=0.03)

    annotations = {
        "source": str(run_dir),
        "files": snaps,
        "times": times,
        "vmin": vmin,
        "vmax": vmax,
        "stride": stride,
    }
    return _save(fig, out_dir / f"fields.{fmt}", dpi, annotations)
