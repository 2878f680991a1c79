"""Command-line front end.

Verbs: simulate | simulate-1d | analyze | sweep | verify. Flags mirror the
dotted config keys (e.g. --solver.dt 1e-3) and override file values.

Exit codes: 0 pass, 1 criteria failure, 2 configuration error,
3 runtime/numerical failure.
"""
from __future__ import annotations

import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from achesim import config as cfgmod
from achesim import diagnostics as dg
from achesim import fields as fd
from achesim import presets, semigroup, solver
from achesim.config import ConfigError
from achesim.shear import TabulatedProfile, make_profile
from achesim.spectral import GridSpec

EXIT_OK = 0
EXIT_CRITERIA = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_argv(argv: list[str]):
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__)
        raise SystemExit(EXIT_OK if argv else EXIT_CONFIG)
    verb = argv[0]
    config_path = None
    overrides: dict[str, str] = {}
    i = 1
    while i < len(argv):
        arg = argv[i]
        if arg in ("-c", "--config"):
            if i + 1 >= len(argv):
                raise ConfigError("--config needs a path")
            config_path = argv[i + 1]
            i += 2
        elif arg.startswith("--"):
            key = arg[2:]
            if "=" in key:
                key, _, value = key.partition("=")
            else:
                if i + 1 >= len(argv):
                    raise ConfigError(f"flag {arg} needs a value")
                value = argv[i + 1]
                i += 1
            overrides[key] = value
            i += 1
        else:
            raise ConfigError(f"unexpected argument {arg!r}")
    overrides["mode"] = verb
    return config_path, overrides


def _grid(cfg: dict) -> GridSpec:
    return GridSpec(nx=cfg["solver.nx"], ny=cfg["solver.ny"])


def _solver_config(cfg: dict, **kwargs) -> solver.SolverConfig:
    base = dict(
        mu=cfg["solver.mu"],
        nu=cfg["solver.nu"],
        grid=_grid(cfg),
        dt=cfg["solver.dt"],
        t_end=cfg["solver.t_end"],
        stabilization=cfg["solver.stabilization"],
        snapshot_stride=cfg["solver.snapshot_stride"],
        series_stride=cfg["solver.series_stride"],
    )
    base.update(kwargs)
    return solver.SolverConfig(**base)


def _profile(cfg: dict):
    name = cfg["profile.name"]
    if name == "table":
        path = cfg["profile.table"]
        if not path:
            raise ConfigError("profile.name=table requires profile.table=<path>")
        return TabulatedProfile.from_file(path)
    return make_profile(name, amplitude=cfg["profile.amplitude"])


def _initial(cfg: dict) -> fd.Field2D:
    preset = cfg["initial.preset"]
    if preset == "snapshot":
        path = cfg["initial.snapshot"]
        if not path:
            raise ConfigError("initial.preset=snapshot requires initial.snapshot=<path>")
        field, _t, _mu, _nu = fd.read_snapshot(path)
        return field
    return presets.make_initial(preset, _grid(cfg), seed=cfg["seed"],
                                eps=cfg["initial.eps"], band=cfg["initial.band"])


class SeriesCsv:
    """Atomic CSV sink for time-series records."""

    def __init__(self, path: str, columns: list[str]):
        self.path = path
        self.tmp = path + ".tmp"
        self.columns = columns
        self._fh = open(self.tmp, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(columns)
        self.rows: list[dict] = []

    def __call__(self, record: dict) -> None:
        self.rows.append(record)
        self._writer.writerow([f"{record[c]:.16g}" if isinstance(record[c], float)
                               else record[c] for c in self.columns])

    def close(self) -> None:
        self._fh.close()
        os.replace(self.tmp, self.path)


def _series_columns(cfg_solver: solver.SolverConfig) -> list[str]:
    cols = list(dg.SERIES_COLUMNS)
    if cfg_solver.record_lap_perp:
        cols.append(dg.LAP_COLUMN)
    return cols


def run_simulation(cfg: dict, out_dir: str, nu: float | None = None,
                   write_snapshots: bool = True):
    """Full 2D run: series CSV + snapshots; returns (records, final state)."""
    scfg = _solver_config(cfg, **({"nu": nu} if nu is not None else {}))
    profile = _profile(cfg)
    initial = _initial(cfg)
    os.makedirs(out_dir, exist_ok=True)
    snap_dir = None
    if write_snapshots:
        snap_dir = os.path.join(out_dir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
    series = SeriesCsv(os.path.join(out_dir, "series.csv"), _series_columns(scfg))
    sinks = solver.RunSinks(series_writer=series, snapshot_dir=snap_dir)
    try:
        final = solver.run(scfg, initial, profile, sinks)
    finally:
        series.close()
    return series.rows, final, scfg, profile, initial


def cmd_simulate(cfg: dict) -> int:
    out_dir = cfg["output_dir"]
    cfgmod.write_resolved(cfg, out_dir)
    run_simulation(cfg, out_dir)
    return EXIT_OK


def cmd_simulate_1d(cfg: dict) -> int:
    out_dir = cfg["output_dir"]
    cfgmod.write_resolved(cfg, out_dir)
    scfg = _solver_config(cfg)
    initial2d = _initial(cfg)
    par = fd.decompose(initial2d).parallel
    records, final = solver.solve_1d(scfg, par)
    path = os.path.join(out_dir, "series_1d.csv")
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mass", "energy_par", "norm_dx2_cpar_L2"])
        for t, f1 in records:
            w.writerow([
                f"{t:.16g}",
                f"{float(np.mean(f1.values)):.16g}",
                f"{dg.energy(f1, scfg.mu):.16g}",
                f"{np.sqrt(np.mean(dg._d1(f1.values) ** 2)):.16g}",
            ])
    os.replace(tmp, path)
    np.savetxt(os.path.join(out_dir, "final_1d.txt"), final.values)
    return EXIT_OK


def _analyze_one(cfg: dict, nu: float, workers=None):
    profile = _profile(cfg)
    mu = cfg["analyzer.mu"]
    curve, lam = semigroup.analyze_single(
        profile, mu * nu, K=cfg["analyzer.k_max"], M=cfg["analyzer.modes"],
        workers=workers)
    return curve, lam


def cmd_analyze(cfg: dict) -> int:
    out_dir = cfg["output_dir"]
    cfgmod.write_resolved(cfg, out_dir)
    profile = _profile(cfg)
    nus = cfgmod.nu_grid_values(cfg)
    curves: dict = {}
    fit = semigroup.scaling_fit(
        profile, nus, mu=cfg["analyzer.mu"], K=cfg["analyzer.k_max"],
        M=cfg["analyzer.modes"], workers=cfgmod.workers_from_env(),
        curves_out=curves)
    semigroup.write_curves_csv(os.path.join(out_dir, "decay.csv"), curves)
    semigroup.write_summary_csv(os.path.join(out_dir, "summary.csv"), fit)
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    out_dir = cfg["output_dir"]
    cfgmod.write_resolved(cfg, out_dir)
    profile = _profile(cfg)
    nus = sorted(cfgmod.nu_grid_values(cfg))
    workers = cfgmod.workers_from_env()
    simulate = cfg["sweep.simulate"]

    def job(nu: float):
        try:
            curve, lam = _analyze_one(cfg, nu)
            rate_ratio = ""
            theorem_holds = ""
            if simulate:
                sub = os.path.join(out_dir, f"nu_{nu:g}")
                records, final, scfg, _prof, initial = run_simulation(
                    cfg, sub, nu=nu, write_snapshots=False)
                times = [r["t"] for r in records]
                norms = [r["norm_perp_L2"] for r in records]
                perp0 = fd.l2_norm(fd.decompose(initial).perp)
                verdict = dg.theorem_check(times, norms, lam, perp0)
                rate_ratio = f"{verdict.rate_ratio:.16g}" if verdict.rate_ratio else ""
                theorem_holds = str(verdict.holds)
            return (nu, f"{lam:.16g}", rate_ratio, theorem_holds, "ok", curve)
        except Exception as exc:
            return (nu, "", "", "", f"failed: {exc}", None)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, nus))
    else:
        results = [job(nu) for nu in nus]
    results.sort(key=lambda r: r[0])

    curves = {r[0]: r[5] for r in results if r[5] is not None}
    if curves:
        semigroup.write_curves_csv(os.path.join(out_dir, "decay.csv"), curves)
    # exponent fit over the successful rows
    ok = [(r[0], float(r[1])) for r in results if r[1]]
    path = os.path.join(out_dir, "sweep_summary.csv")
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "lambda", "rate_ratio", "theorem_holds", "status"])
        for nu, lam, ratio, holds, status, _curve in results:
            w.writerow([f"{nu:.16g}", lam, ratio, holds, status])
    os.replace(tmp, path)
    if len(ok) >= 2:
        lognu = np.log([x[0] for x in ok])
        loglam = np.log([x[1] for x in ok])
        slope, intercept = np.polyfit(lognu, loglam, 1)
        fitrep = semigroup.RateFit(
            lam=ok[0][1], delta0=float(np.exp(intercept)), exponent=float(slope),
            exponent_predicted=None, m=None,
            nu_grid=np.array([x[0] for x in ok]), rates=np.array([x[1] for x in ok]))
        try:
            from achesim.shear import critical_points
            rep = critical_points(profile)
            if rep.m_max is not None:
                fitrep.m = rep.m_max
                fitrep.exponent_predicted = 2 * rep.m_max / (2 * rep.m_max + 1)
        except ValueError:
            pass
        semigroup.write_summary_csv(os.path.join(out_dir, "summary.csv"), fitrep)
    # per-row failures are recorded in the CSV and do not abort the sweep;
    # only a sweep with no successful rows at all is a runtime failure
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_verify(cfg: dict) -> int:
    """Full acceptance pipeline for one scenario; exit 0 iff criteria pass."""
    out_dir = cfg["output_dir"]
    cfgmod.write_resolved(cfg, out_dir)
    profile = _profile(cfg)
    mu_nu = cfg["solver.mu"] * cfg["solver.nu"]
    failures: list[str] = []

    _curve, lam = semigroup.analyze_single(
        profile, mu_nu, K=cfg["analyzer.k_max"], M=cfg["analyzer.modes"],
        workers=cfgmod.workers_from_env())

    records, final, scfg, _prof, initial = run_simulation(cfg, out_dir)
    pair0 = fd.decompose(initial)
    perp0 = fd.l2_norm(pair0.perp)
    phi0 = spectralnorm_dx1(pair0.perp)
    psi0 = spectralnorm_dx2(pair0.perp)

    consts = dg.constants(
        psi0_norm=psi0, c_perp0_norm=perp0, dx1_c_perp0_norm=phi0,
        mu=scfg.mu, lam=lam, shear_lipschitz=profile.lipschitz_bound,
        C_star=cfg["constants.c_star"],
        B0_empirical=max(r["norm_dx2_cpar_L2"] ** 2 for r in records),
    )

    times = [r["t"] for r in records]
    norms = [r["norm_perp_L2"] for r in records]
    verdict = None
    bootstrap = None
    try:
        verdict = dg.theorem_check(times, norms, lam, perp0)
    except ValueError as exc:
        failures.append(f"theorem_check: {exc}")

    masses = [abs(r["mass"] - records[0]["mass"]) for r in records]
    if max(masses) > 1e-10:
        failures.append(f"mass drift {max(masses):.3e} > 1e-10")

    applicable = consts.smallness_ok
    if verdict is not None and applicable:
        if not verdict.holds:
            failures.append(f"theorem bound violated, worst margin {verdict.worst_margin:.3e}")
        if verdict.fitted_rate is None or verdict.fitted_rate < 0.2 * lam:
            failures.append("fitted perp decay rate below 0.2*lambda")
        bootstrap = dg.bootstrap_monitor(records, consts, scfg.mu, scfg.nu)
        if not bootstrap.all_pass:
            failures.append("bootstrap assumptions H1-H4 violated")
    elif verdict is None and applicable:
        failures.append("insufficient decay")

    # one-dimensionalization: compare c_par(t_end) with the 1D solve
    _recs1d, final1d = solver.solve_1d(scfg, pair0.parallel,
                                       record_every=10**9)
    par_final = fd.decompose(final.field).parallel
    diff = float(np.sqrt(np.mean((par_final.values - final1d.values) ** 2)))
    perp_final = norms[-1]
    tol = max(1e-2, 10.0 * perp_final)
    if diff > tol:
        failures.append(f"1D comparison: ||diff||={diff:.3e} > {tol:.3e}")

    report_path = os.path.join(out_dir, "report.txt")
    tmp = report_path + ".tmp"
    with open(tmp, "w") as fh:
        for line in dg.report_lines(consts, verdict, bootstrap):
            fh.write(line + "\n")
        fh.write(f"one_d_difference = {diff!r}\n")
        fh.write(f"one_d_tolerance = {tol!r}\n")
        for msg in failures:
            fh.write(f"failure = {msg}\n")
    os.replace(tmp, report_path)
    if failures:
        print(f"verify: FAIL: {failures[0]}", file=sys.stderr)
        return EXIT_CRITERIA
    print("verify: PASS")
    return EXIT_OK


def spectralnorm_dx1(perp: fd.Field2D) -> float:
    from achesim import spectral
    d = spectral.derivative(perp.values, "x1", 1)
    return float(np.sqrt(np.mean(d**2)))


def spectralnorm_dx2(perp: fd.Field2D) -> float:
    from achesim import spectral
    d = spectral.derivative(perp.values, "x2", 1)
    return float(np.sqrt(np.mean(d**2)))


_COMMANDS = {
    "simulate": cmd_simulate,
    "simulate-1d": cmd_simulate_1d,
    "analyze-semigroup": cmd_analyze,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config_path, overrides = _parse_argv(argv)
        cfg = cfgmod.parse_config(config_path, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[cfg["mode"]](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
