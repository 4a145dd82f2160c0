"""File formats: ensemble snapshots, CSV tables, metadata records, configs.

Every file starts with ``#`` provenance lines (tool version, config hash,
seed); readers skip them.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import WeightedEnsemble
from .coarse import SpinResolvedTriple
from .errors import ConfigError

OUTDIR_ENV = "QDTREE_OUTDIR"
OBSERVABLE_COLUMNS = ("variant", "J", "k", "t", "M_or_N", "seed",
                      "purity", "chi", "lambda_c", "lambda_d")
TRIPLE_COLUMNS = ("M", "p", "a", "b")
CLIFFORD_COLUMNS = ("t", "pi_z", "pi_x")
HIST_BINS = 200


def default_outdir() -> Path:
    return Path(os.environ.get(OUTDIR_ENV, "qdtree_out"))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(config: dict | None = None, seed=None) -> list:
    h = config_hash(config or {})
    return [f"# qdtree {__version__}", f"# config_hash={h}", f"# seed={seed}"]


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            return "" if np.isnan(x) else repr(float(x))
        return f"{float(x):.17g}"
    if x is None:
        return ""
    return str(x)


# -- snapshots ------------------------------------------------------------------

def write_snapshot(path, ens: WeightedEnsemble, variant: str, J: float, k: int,
                   config=None, seed=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in provenance(config, seed):
            fh.write(line + "\n")
        fh.write(f"t={ens.t} variant={variant} J={J:.17g} k={k}\n")
        for w, u, v in zip(ens.w, ens.u, ens.v):
            fh.write(f"{w:.17g} {u:.17g} {v:.17g}\n")


def read_snapshot(path):
    """Return (ensemble, header dict)."""
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = dict(tok.split("=", 1) for tok in line.split())
                continue
            rows.append([float(x) for x in line.split()])
    if header is None:
        raise ConfigError(f"{path}: missing snapshot header")
    arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
    header = {"t": int(header["t"]), "variant": header["variant"],
              "J": float(header["J"]), "k": int(header["k"])}
    ens = WeightedEnsemble(arr[:, 0], arr[:, 1], arr[:, 2], t=header["t"])
    return ens, header


# -- CSV ----------------------------------------------------------------------

class CsvTable:
    """Append-only CSV with provenance comments and a fixed column set."""

    def __init__(self, path, columns, config=None, seed=None, append=False):
        self.path = Path(path)
        self.columns = tuple(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not (append and self.path.exists())
        self._fh = open(self.path, "a" if not fresh else "w", newline="")
        self._w = csv.writer(self._fh)
        if fresh:
            for line in provenance(config, seed):
                self._fh.write(line + "\n")
            self._w.writerow(self.columns)

    def write(self, row):
        if isinstance(row, dict):
            row = [row.get(c) for c in self.columns]
        self._w.writerow([_fmt(x) for x in row])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_csv(path):
    """Rows as dicts of strings, skipping provenance comments."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_triple(path, tr: SpinResolvedTriple, config=None, seed=None):
    with CsvTable(path, TRIPLE_COLUMNS, config, seed) as tab:
        for M, p, a, b in zip(tr.grid, tr.p, tr.a, tr.b):
            tab.write((int(M), p, a, b))


def read_triple(path) -> SpinResolvedTriple:
    rows = read_csv(path)
    M = np.array([int(r["M"]) for r in rows])
    t = int(round(np.log2(M.max()))) if M.max() > 0 else 0
    return SpinResolvedTriple(t, [float(r["p"]) for r in rows],
                              [float(r["a"]) for r in rows], [float(r["b"]) for r in rows])


def write_histogram(path, ens: WeightedEnsemble, bins: int = HIST_BINS, config=None, seed=None):
    """Weights accumulated on a bins x bins grid over [-1, 1]^2; rows index u, columns v."""
    H, _, _ = np.histogram2d(ens.u, ens.v, bins=bins, range=[[-1, 1], [-1, 1]], weights=ens.w)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in provenance(config, seed):
            fh.write(line + "\n")
        fh.write(f"# rows: u bins, columns: v bins, {bins}x{bins} over [-1,1]^2\n")
        np.savetxt(fh, H, delimiter=",", fmt="%.17g")
    return H


def append_metadata(path, record: dict, config=None, seed=None):
    """Append one JSON record; with ``config`` the provenance keys are added if absent."""
    if config is not None:
        record = {"tool": f"qdtree {__version__}", "config_hash": config_hash(config),
                  "seed": seed, **record}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o))


def write_json(path, obj, config=None, seed=None):
    """Write a JSON object with a provenance block (version, config hash, seed)."""
    obj = {**obj, "provenance": {"tool": f"qdtree {__version__}",
                                 "config_hash": config_hash(config or {}), "seed": seed}}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


# -- config files -------------------------------------------------------------

def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use dashes or underscores."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def parse_grid(spec: str, cast=float) -> list:
    """'a:b:step' (inclusive), 'a:b' for integers, or a comma list; '' gives []."""
    spec = (spec or "").strip()
    if not spec:
        return []
    try:
        return _parse_grid(spec, cast)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad grid {spec!r}: {exc}")


def _parse_grid(spec, cast):
    if ":" in spec:
        parts = spec.split(":")
        lo, hi = cast(parts[0]), cast(parts[1])
        step = cast(parts[2]) if len(parts) > 2 else cast(1)
        if step <= 0:
            raise ConfigError(f"bad grid step in {spec!r}")
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        vals = [lo + i * step for i in range(max(n, 0))]
        return [round(v, 12) if cast is float else cast(v) for v in vals]
    return [cast(x) for x in spec.split(",") if x.strip()]
