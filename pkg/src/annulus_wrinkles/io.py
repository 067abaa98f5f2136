"""Result persistence: CSV tables, JSON summaries and the run manifest."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .grids import RadialGrid
from .measure import FrequencyMeasure

GAMMA_COLUMNS = ("L", "term1", "term2", "term3", "term4", "term5", "term6", "total",
                 "Finfty_target", "measure_discrepancy")
MEASURE_COLUMNS = ("r", "k", "b", "db_dr")


def _plain(value):
    """Convert numpy scalars and arrays to JSON-friendly Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    return value


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    """Write rows under a header; floats use ``repr`` so values round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in row] for row in rows[1:]])


def save_measure(mu: FrequencyMeasure, stem, header: dict | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (long format r, k, b, db_dr) and ``<stem>.json``.

    The JSON header carries the grid geometry so that :func:`load_measure` can
    rebuild the exact :class:`FrequencyMeasure`.
    """
    stem = Path(stem)
    r, k = mu.r_grid.nodes, mu.k_set
    db = mu.db_dr
    rows = ((r[i], k[j], mu.b[i, j], db[i, j]) for i in range(r.size) for j in range(k.size))
    csv_path = write_csv(stem.with_suffix(".csv"), MEASURE_COLUMNS, rows)
    meta = {
        "nr": int(r.size),
        "nk": int(k.size),
        "r_lower": mu.r_grid.lower,
        "r_upper": mu.r_grid.upper,
        "r_nodes": r,
        "k_set": k,
    }
    meta.update(header or {})
    json_path = write_json(stem.with_suffix(".json"), meta)
    return csv_path, json_path


def load_measure(stem) -> FrequencyMeasure:
    """Inverse of :func:`save_measure`."""
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    header, data = read_csv(stem.with_suffix(".csv"))
    if tuple(header) != MEASURE_COLUMNS:
        raise ValueError(f"unexpected measure columns {header}")
    nr, nk = meta["nr"], meta["nk"]
    if data.shape != (nr * nk, 4):
        raise ValueError("measure table does not match its header")
    grid = RadialGrid(np.asarray(meta["r_nodes"], float), meta["r_lower"], meta["r_upper"])
    b = data[:, 2].reshape(nr, nk)
    return FrequencyMeasure(grid, np.asarray(meta["k_set"], float), b)


def write_gamma_table(path, rows) -> Path:
    """Limsup table with the fixed column set, one line per ``L``."""
    return write_csv(path, GAMMA_COLUMNS, ([row.as_dict()[c] for c in GAMMA_COLUMNS] for row in rows))


def package_versions() -> dict:
    out = {"python": platform.python_version()}
    for name in ("artifact", "numpy", "scipy", "clarabel"):
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "unknown"
    return out


@dataclass
class ResultManifest:
    """Record of one command invocation.

    Timings live only here, so the result files themselves are reproducible
    byte for byte.
    """

    command: str
    config_hash: str
    versions: dict = field(default_factory=package_versions)
    files: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    status: str = "ok"
    checks: dict = field(default_factory=dict)

    def add(self, path) -> None:
        self.files.append(str(Path(path).name))

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "versions": self.versions,
            "files": sorted(self.files),
            "timings": self.timings,
            "status": self.status,
            "checks": self.checks,
        }

    def write(self, out_dir) -> Path:
        return write_json(Path(out_dir) / f"manifest_{self.command}.json", self.to_dict())
