"""Deterministic CSV/JSON writers, versioned scenario configs and run manifests.

Byte-identity rules: floats in CSV use 17 significant digits, JSON uses
Python's shortest round-trip repr with sorted keys, both with LF endings.
Wall-clock time never enters a manifest; it goes to a separate timing file.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .rng import ALGORITHM_ID

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return "%.17g" % f
    if v is None:
        return ""
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for r in rows:
        if len(r) != len(header):
            raise ValueError("row length does not match header")
        lines.append(",".join(_fmt(v) for v in r))
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="\n", encoding="utf-8") as f:
        f.write(csv_text(header, rows))
    return p


def write_columns(path: str | Path, columns: dict[str, Sequence]) -> Path:
    names = list(columns)
    n = {len(v) for v in columns.values()}
    if len(n) != 1:
        raise ValueError("columns differ in length")
    return write_csv(path, names, zip(*columns.values()))


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    import csv

    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ConfigError(f"{path} is empty")
    return rows[0], rows[1:]


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def json_text(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="\n", encoding="utf-8") as f:
        f.write(json_text(obj))
    return p


def sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ------------------------------------------------------------------ configs

@dataclass
class Sweep:
    parameter: str
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if int(self.points) < 2:
            raise ConfigError("sweeps need at least 2 points")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("sweep bounds must be finite")
        self.points = int(self.points)

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class ScenarioConfig:
    """One CLI run.  Rates are in units of 2 pi MHz, times in ns, lengths in km."""

    command: str
    schema_version: int = SCHEMA_VERSION
    rates: dict | None = None
    physical: dict | None = None
    preset: str | None = None
    overrides: dict = field(default_factory=dict)
    sweep: Sweep | None = None
    trials: int | None = None
    seed: int | None = None
    workers: int = 1
    format: str = "csv"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version {self.schema_version} is not supported (expected {SCHEMA_VERSION})")
        if isinstance(self.sweep, dict):
            self.sweep = Sweep(**_strict(Sweep, self.sweep, "sweep"))
        if self.trials is not None and int(self.trials) <= 0:
            raise ConfigError("trials must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if "command" not in d:
            raise ConfigError("config is missing 'command'")
        return cls(**_strict(cls, d, "config"))


def _strict(cls, d: dict, what: str) -> dict:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown {what} keys: {unknown}")
    return dict(d)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    try:
        return ScenarioConfig.from_dict(d)
    except TypeError as e:
        raise ConfigError(str(e)) from e


# ----------------------------------------------------------------- manifests

@dataclass
class RunManifest:
    config: dict
    seed: int | None
    outputs: list[dict]
    version: str = __version__
    rng_algorithm: str = ALGORITHM_ID
    duration_s: float | None = None  # kept out of manifest.json

    def to_dict(self) -> dict:
        return {"config": self.config, "seed": self.seed, "outputs": self.outputs,
                "version": self.version, "rng_algorithm": self.rng_algorithm}


def build_manifest(out_dir: str | Path, files: Sequence[str | Path], config: dict, seed: int | None,
                   duration_s: float | None = None) -> RunManifest:
    """Write manifest.json (deterministic) and timing.json (wall clock) into out_dir."""
    out = Path(out_dir)
    entries = []
    for f in files:
        p = Path(f)
        entries.append({"path": os.path.relpath(p, out).replace(os.sep, "/"), "sha256": sha256(p)})
    entries.sort(key=lambda e: e["path"])
    m = RunManifest(config, seed, entries, duration_s=duration_s)
    write_json(out / "manifest.json", m.to_dict())
    if duration_s is not None:
        write_json(out / "timing.json", {"duration_s": duration_s})
    return m
