"""Artifact writers: CSV tables, JSON reports, binary grid fields and manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np


def _clean(obj):
    """JSON-ready copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path: Path, data) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None) -> Path:
    path = Path(path)
    rows = [_clean(r) for r in rows]
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return path


def read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_field(path: Path, values, bbox, field_name: str) -> tuple[Path, Path]:
    """Row-major little-endian float64 dump plus a JSON sidecar ``{nx, ny, bbox, field_name}``."""
    path = Path(path)
    arr = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    if arr.ndim != 2:
        raise ValueError("fields must be two-dimensional (ny, nx)")
    ny, nx = arr.shape
    arr.tofile(path)
    side = path.with_suffix(".json")
    write_json(side, {"nx": nx, "ny": ny, "bbox": [float(b) for b in bbox], "field_name": field_name})
    return path, side


def read_field(path: Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = read_json(path.with_suffix(".json"))
    arr = np.fromfile(path, dtype="<f8").reshape(meta["ny"], meta["nx"])
    return arr, meta


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


MANIFEST = "manifest.json"


def write_manifest(out_dir: Path, config: dict, extra: dict | None = None) -> Path:
    """List every file under ``out_dir`` (except the manifest) with its SHA-256."""
    out_dir = Path(out_dir)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != MANIFEST)
    data = {
        "config": config,
        "artifacts": [{"path": p.relative_to(out_dir).as_posix(), "sha256": sha256(p)} for p in files],
    }
    if extra:
        data.update(extra)
    return write_json(out_dir / MANIFEST, data)


def verify_manifest(path: Path) -> list[str]:
    """Paths whose current hash differs from the manifest (missing files included)."""
    path = Path(path)
    data = read_json(path)
    bad = []
    for entry in data.get("artifacts", []):
        p = path.parent / entry["path"]
        if not p.is_file() or sha256(p) != entry["sha256"]:
            bad.append(entry["path"])
    return bad
