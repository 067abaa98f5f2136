"""JSON run configuration with strict validation.

Every section has defaults; unknown keys are rejected with their dotted path so
that typos never silently fall back to a default.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError, InvalidConfigError
from .relaxed import REFERENCE_CONFIG, LameConfig

DEFAULT_TOLERANCES = {
    "relaxed_solver": 1e-11,
    "oracle_distance": 1e-3,
    "el_order_ratio": 3.5,
    "plancherel": 1e-10,
    "excess_identity": 1e-8,
    "homogeneity": 1e-12,
    "convexity": 1e-12,
    "gradient": 1e-6,
    "constraint": 1e-10,
    "equipartition": 0.05,
    "smallk_mass": 1e-6,
    "grid_stability": 0.01,
    "log_fit_r2": 0.99,
    "gamma_gap": 0.25,
    "periodicity": 1e-10,
    "kernel": 1e-12,
}

DEFAULT_SCHEDULE = (1e6, 1e8, 1e10, 1e12)


@dataclass(frozen=True)
class GridConfig:
    """Resolutions used by the commands.

    ``relaxed_nodes`` is the oracle grid, ``nr``/``nk`` the measure grid and
    frequency count, ``energy_nr``/``theta_count`` the lattice for energy checks.
    """

    relaxed_nodes: int = 2048
    nr: int = 200
    nk: int = 64
    k_min: float = 1.0
    k_max: float = 40.0
    energy_nr: int = 2048
    theta_count: int = 256


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of a run."""

    lame: LameConfig = REFERENCE_CONFIG
    grids: GridConfig = field(default_factory=GridConfig)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    schedule: tuple = DEFAULT_SCHEDULE
    output_dir: str = "out"
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "lame": self.lame.as_dict(),
            "grids": asdict(self.grids),
            "tolerances": dict(sorted(self.tolerances.items())),
            "schedule": {"L": [float(L) for L in self.schedule]},
            "output_dir": self.output_dir,
            "seed": int(self.seed),
        }

    def to_json(self) -> str:
        """Canonical serialization (sorted keys, no whitespace variation)."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON; stable under re-serialization."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def with_overrides(self, **kwargs) -> "RunConfig":
        """Copy with top-level fields or grid entries replaced (``None`` values ignored)."""
        grid_keys = {f for f in GridConfig.__dataclass_fields__}
        grids = {k: v for k, v in kwargs.items() if k in grid_keys and v is not None}
        top = {k: v for k, v in kwargs.items() if k not in grid_keys and v is not None}
        out = replace(self, grids=replace(self.grids, **grids), **top)
        return parse_config(out.to_json())


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, "unknown key")


def _number(value, path, positive=True, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if integer and (not float(value).is_integer()):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(path, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _parse_lame(obj) -> LameConfig:
    names = ("T_in", "T_out", "R_in", "R_out")
    if isinstance(obj, list):
        if len(obj) != 4:
            raise ConfigError("lame", "expected [T_in, T_out, R_in, R_out]")
        obj = dict(zip(names, obj))
    _check_keys(obj, names, "lame")
    missing = [n for n in names if n not in obj]
    if missing:
        raise ConfigError(f"lame.{missing[0]}", "missing")
    values = {n: _number(obj[n], f"lame.{n}") for n in names}
    try:
        return LameConfig(**values)
    except InvalidConfigError as exc:
        raise ConfigError("lame", str(exc)) from exc


def _parse_grids(obj) -> GridConfig:
    allowed = GridConfig.__dataclass_fields__
    _check_keys(obj, allowed, "grids")
    out = {}
    for key, value in obj.items():
        integer = key not in ("k_min", "k_max")
        out[key] = _number(value, f"grids.{key}", integer=integer)
    g = GridConfig(**out)
    if g.theta_count < 4 or g.theta_count % 2:
        raise ConfigError("grids.theta_count", "must be an even integer >= 4")
    if g.nr < 8:
        raise ConfigError("grids.nr", "must be at least 8")
    if g.relaxed_nodes < 16:
        raise ConfigError("grids.relaxed_nodes", "must be at least 16")
    if g.energy_nr < 8:
        raise ConfigError("grids.energy_nr", "must be at least 8")
    if g.nk < 1:
        raise ConfigError("grids.nk", "must be at least 1")
    if g.k_max <= g.k_min:
        raise ConfigError("grids.k_max", "must exceed grids.k_min")
    return g


def _parse_schedule(obj) -> tuple:
    if isinstance(obj, list):
        obj = {"L": obj}
    _check_keys(obj, ("L", "start", "stop", "num"), "schedule")
    if "L" in obj:
        if set(obj) != {"L"}:
            raise ConfigError("schedule", "give either L or start/stop/num")
        values = obj["L"]
        if not isinstance(values, list) or not values:
            raise ConfigError("schedule.L", "expected a non-empty list")
        Ls = [_number(v, f"schedule.L[{i}]") for i, v in enumerate(values)]
    else:
        for key in ("start", "stop", "num"):
            if key not in obj:
                raise ConfigError(f"schedule.{key}", "missing")
        start = _number(obj["start"], "schedule.start")
        stop = _number(obj["stop"], "schedule.stop")
        num = _number(obj["num"], "schedule.num", integer=True)
        if stop < start:
            raise ConfigError("schedule.stop", "must not be below schedule.start")
        Ls = np.geomspace(start, stop, num).tolist()
    return tuple(sorted(float(L) for L in Ls))


def parse_config(text: str) -> RunConfig:
    """Parse and validate JSON text into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Malformed JSON, unknown keys, wrong types or out-of-range values; the
        message starts with the dotted key path.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    _check_keys(obj, ("lame", "grids", "tolerances", "schedule", "output_dir", "seed"), "")
    lame = _parse_lame(obj["lame"]) if "lame" in obj else REFERENCE_CONFIG
    grids = _parse_grids(obj.get("grids", {}))
    tol = dict(DEFAULT_TOLERANCES)
    given = obj.get("tolerances", {})
    _check_keys(given, DEFAULT_TOLERANCES, "tolerances")
    for key, value in given.items():
        tol[key] = _number(value, f"tolerances.{key}")
    schedule = _parse_schedule(obj["schedule"]) if "schedule" in obj else DEFAULT_SCHEDULE
    output_dir = obj.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "expected a non-empty string")
    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed", "expected an unsigned 64-bit integer")
    return RunConfig(lame, grids, tol, schedule, output_dir, seed)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
