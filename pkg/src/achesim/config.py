"""Experiment configuration: flat "key = value" files with dotted keys.

Flags on the command line mirror the dotted keys (--solver.dt 1e-3) and
override file values. The fully resolved configuration is echoed to
output_dir/config.resolved so any run can be reproduced exactly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field

from achesim.presets import RNG_ALGORITHM

MODES = ("simulate", "simulate-1d", "analyze-semigroup", "sweep", "verify")
MODE_ALIASES = {"analyze": "analyze-semigroup"}


class ConfigError(ValueError):
    pass


# key -> (type, default, validator or None, documented range text)
def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


_SCHEMA = {
    "mode": (str, None, lambda v: v in MODES, f"one of {MODES}"),
    "output_dir": (str, "runs/out", None, "writable path"),
    "seed": (int, 0, None, "64-bit integer"),
    "solver.mu": (float, 1e-2, _positive, "> 0"),
    "solver.nu": (float, 1e-2, _positive, "> 0"),
    "solver.nx": (int, 128, lambda v: v >= 8 and v % 2 == 0, "even integer >= 8"),
    "solver.ny": (int, 128, lambda v: v >= 8 and v % 2 == 0, "even integer >= 8"),
    "solver.dt": (float, 2e-3, _positive, "> 0"),
    "solver.t_end": (float, 400.0, _nonneg, ">= 0"),
    "solver.stabilization": (float, 2.0, _nonneg, ">= 0"),
    "solver.snapshot_stride": (int, 10000, _positive, "positive integer"),
    "solver.series_stride": (int, 50, _positive, "positive integer"),
    "profile.name": (str, "sin", None, "sin | cos | sin3 | zero | table"),
    "profile.amplitude": (float, 1.0, None, "real"),
    "profile.table": (str, "", None, "path to a one-column sample file"),
    "initial.preset": (str, "remark-example",
                       lambda v: v in ("remark-example", "random-bandlimited", "one-d-only", "snapshot"),
                       "remark-example | random-bandlimited | one-d-only | snapshot"),
    "initial.eps": (float, 0.1, None, "real"),
    "initial.band": (int, 8, _positive, "positive integer"),
    "initial.snapshot": (str, "", None, "path to a snapshot file"),
    "constants.c_star": (float, 1.0, _positive, "> 0"),
    "analyzer.nu_grid": (str, "1e-2,1e-3,1e-4,1e-5", None, "comma-separated positive reals"),
    "analyzer.mu": (float, 1.0, _positive, "> 0"),
    "analyzer.k_max": (int, 8, _positive, "positive integer"),
    "analyzer.modes": (int, 128, lambda v: v >= 32 and v % 2 == 0, "even integer >= 32"),
    "sweep.simulate": (bool, False, None, "true | false"),
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key: str, text: str):
    typ, _default, check, rng = _SCHEMA[key]
    try:
        if typ is bool:
            value = _parse_bool(text)
        else:
            value = typ(text)
    except ValueError:
        raise ConfigError(f"value {text!r} for key {key!r} is not a valid {typ.__name__}")
    if check is not None and not check(value):
        raise ConfigError(f"value {value!r} for key {key!r} out of range; expected {rng}")
    return value


def parse_config_text(text: str, overrides: dict[str, str] | None = None) -> dict:
    """Parse "key = value" lines (# comments allowed) into a resolved dict."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        raw[key.strip()] = value.strip()
    for key, value in (overrides or {}).items():
        raw[key] = value

    if "mode" in raw:
        raw["mode"] = MODE_ALIASES.get(raw["mode"], raw["mode"])
    resolved = {}
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        resolved[key] = _coerce(key, value)
    if "mode" not in resolved:
        raise ConfigError("missing required key 'mode'")
    for key, (typ, default, _check, _rng) in _SCHEMA.items():
        if key not in resolved and default is not None:
            resolved[key] = default
    return resolved


def parse_config(path: str | None, overrides: dict[str, str] | None = None) -> dict:
    text = ""
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            text = fh.read()
    return parse_config_text(text, overrides)


def nu_grid_values(cfg: dict) -> list[float]:
    out = []
    for chunk in cfg["analyzer.nu_grid"].split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        v = float(chunk)
        if v <= 0:
            raise ConfigError(f"analyzer.nu_grid entries must be > 0, got {v}")
        out.append(v)
    if not out:
        raise ConfigError("analyzer.nu_grid is empty")
    return out


def resolved_text(cfg: dict) -> str:
    lines = [f"rng = {RNG_ALGORITHM}"]
    for key in sorted(cfg):
        lines.append(f"{key} = {cfg[key]}")
    return "\n".join(lines) + "\n"


def write_resolved(cfg: dict, output_dir: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, "config.resolved")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(resolved_text(cfg))
    os.replace(tmp, path)
    return path


def workers_from_env() -> int | None:
    """ACHESIM_WORKERS selects the worker-thread count; absent means auto."""
    raw = os.environ.get("ACHESIM_WORKERS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ACHESIM_WORKERS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("ACHESIM_WORKERS must be >= 1")
    return n
