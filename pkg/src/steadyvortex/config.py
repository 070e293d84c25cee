"""Scenario configuration: parsing (JSON or TOML) and validation."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigInvalid

SCENARIOS = ("profile", "kr", "solve", "turkington", "compare", "sweep", "pohozaev", "probe", "dynamics")
OUTPUT_ENV = "STEADYVORTEX_OUTPUT_DIR"

_BLOCKS = {
    "domain": {"kind", "a", "b", "n", "points", "csv"},
    "physics": {"lam", "lams", "p", "ps", "strengths", "centers", "mask_radius", "cap"},
    "numerics": {
        "grid_n",
        "psi_tol",
        "mass_tol",
        "max_iter",
        "seed",
        "deterministic",
        "n_trials",
        "T",
        "dt",
        "rho",
        "tau",
        "x0",
        "x1",
        "n_nodes",
        "mfs_tol",
        "dump_fields",
    },
    "output": {"dir"},
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    domain: dict
    physics: dict
    numerics: dict
    output_dir: Path
    source: Path | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def seed(self) -> int | None:
        return self.numerics.get("seed")

    @property
    def deterministic(self) -> bool:
        return bool(self.numerics.get("deterministic", True))

    def resolved(self) -> dict:
        """Full configuration with defaults filled in, as echoed into the manifest."""
        return {
            "scenario": self.scenario,
            "domain": self.domain,
            "physics": self.physics,
            "numerics": self.numerics,
            "output": {"dir": str(self.output_dir)},
        }


def load_document(path: Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read configuration: {exc}", "path") from exc
    if path.suffix.lower() == ".toml":
        try:
            return tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigInvalid(f"TOML parse error: {exc}", "document") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}", "document") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid("top level must be an object", "document")
    return doc


def _num(block, key, name, *, positive=False, minimum=None, integer=False, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigInvalid("missing required value", name)
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(f"expected a number, got {v!r}", name)
    if integer and not float(v).is_integer():
        raise ConfigInvalid(f"expected an integer, got {v!r}", name)
    if not math.isfinite(v):
        raise ConfigInvalid("must be finite", name)
    if positive and not v > 0:
        raise ConfigInvalid(f"must be positive, got {v!r}", name)
    if minimum is not None and v < minimum:
        raise ConfigInvalid(f"must be at least {minimum}, got {v!r}", name)
    return int(v) if integer else float(v)


def _points(v, name, count=None):
    try:
        pts = [[float(a), float(b)] for a, b in v]
    except (TypeError, ValueError):
        raise ConfigInvalid("expected a list of [x, y] pairs", name) from None
    if count is not None and len(pts) != count:
        raise ConfigInvalid(f"expected {count} points, got {len(pts)}", name)
    if not all(math.isfinite(c) for p in pts for c in p):
        raise ConfigInvalid("coordinates must be finite", name)
    return pts


def _point(v, name):
    return _points([v], name, 1)[0]


def _num_list(v, name, positive=False):
    if not isinstance(v, list) or not v:
        raise ConfigInvalid("expected a non-empty list of numbers", name)
    return [_num({"v": x}, "v", f"{name}[{i}]", positive=positive, required=True) for i, x in enumerate(v)]


def validate(doc: dict, source: Path | None = None) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigInvalid("top level must be a table/object", "document")
    unknown = set(doc) - {"scenario", *_BLOCKS}
    if unknown:
        raise ConfigInvalid(f"unknown keys {sorted(unknown)}", "document")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigInvalid(f"must be one of {list(SCENARIOS)}, got {scenario!r}", "scenario")
    blocks = {}
    for name, allowed in _BLOCKS.items():
        blk = doc.get(name, {})
        if not isinstance(blk, dict):
            raise ConfigInvalid("expected a table/object", name)
        extra = set(blk) - allowed
        if extra:
            raise ConfigInvalid(f"unknown keys {sorted(extra)}", name)
        blocks[name] = blk
    base = source.parent if source is not None else Path.cwd()
    domain = _validate_domain(blocks["domain"], base)
    physics = _validate_physics(scenario, blocks["physics"])
    numerics = _validate_numerics(scenario, blocks["numerics"])
    out = os.environ.get(OUTPUT_ENV) or blocks["output"].get("dir")
    if not out or not isinstance(out, str):
        raise ConfigInvalid("an output directory is required", "output.dir")
    out_path = Path(out)
    if not out_path.is_absolute():
        out_path = base / out_path
    return ScenarioConfig(scenario, domain, physics, numerics, out_path, source, doc)


def _validate_domain(blk: dict, base: Path) -> dict:
    kind = blk.get("kind", "disk")
    if kind == "disk":
        if set(blk) - {"kind"}:
            raise ConfigInvalid("the unit disk takes no parameters", "domain")
        return {"kind": "disk"}
    if kind == "ellipse":
        a = _num(blk, "a", "domain.a", positive=True, required=True)
        b = _num(blk, "b", "domain.b", positive=True, required=True)
        n = _num(blk, "n", "domain.n", integer=True, minimum=16, default=512)
        return {"kind": "ellipse", "a": a, "b": b, "n": n}
    if kind == "polygon":
        if "csv" in blk:
            p = Path(blk["csv"])
            p = p if p.is_absolute() else base / p
            if not p.is_file():
                raise ConfigInvalid(f"file not found: {p}", "domain.csv")
            return {"kind": "polygon", "csv": str(p)}
        if "points" not in blk:
            raise ConfigInvalid("polygon needs points or csv", "domain")
        pts = _points(blk["points"], "domain.points")
        if len(pts) < 3:
            raise ConfigInvalid("at least three points are required", "domain.points")
        return {"kind": "polygon", "points": pts}
    raise ConfigInvalid(f"unknown domain kind {kind!r}", "domain.kind")


def _validate_physics(scenario: str, blk: dict) -> dict:
    out: dict = {}
    needs_p = scenario in ("profile", "solve", "turkington", "compare", "sweep", "probe")
    if "ps" in blk and scenario == "profile":
        out["ps"] = _num_list(blk["ps"], "physics.ps", positive=True)
    elif needs_p:
        out["p"] = _num(blk, "p", "physics.p", positive=True, required=True)
    if scenario == "sweep":
        if "lams" not in blk:
            raise ConfigInvalid("missing required value", "physics.lams")
        out["lams"] = _num_list(blk["lams"], "physics.lams", positive=True)
        if any(v < 1 for v in out["lams"]):
            raise ConfigInvalid("lambda values must be at least 1", "physics.lams")
    elif scenario in ("solve", "turkington", "compare", "probe"):
        out["lam"] = _num(blk, "lam", "physics.lam", minimum=1.0, required=True)
    if scenario in ("kr", "solve", "turkington", "compare", "sweep", "probe", "dynamics"):
        if "strengths" not in blk:
            raise ConfigInvalid("missing required value", "physics.strengths")
        out["strengths"] = _num_list(blk["strengths"], "physics.strengths", positive=True)
        if "centers" not in blk:
            raise ConfigInvalid("missing required value", "physics.centers")
        out["centers"] = _points(blk["centers"], "physics.centers", len(out["strengths"]))
        if "mask_radius" in blk:
            out["mask_radius"] = _num(blk, "mask_radius", "physics.mask_radius", positive=True)
    if scenario in ("turkington", "compare", "probe") and "cap" in blk:
        out["cap"] = _num(blk, "cap", "physics.cap", positive=True)
    if scenario in ("turkington", "compare") and len(out.get("strengths", [])) != 1:
        raise ConfigInvalid("the vorticity method needs exactly one vortex", "physics.strengths")
    return out


def _validate_numerics(scenario: str, blk: dict) -> dict:
    out = {
        "deterministic": bool(blk.get("deterministic", True)),
    }
    if not isinstance(blk.get("deterministic", True), bool):
        raise ConfigInvalid("expected true or false", "numerics.deterministic")
    if scenario in ("solve", "turkington", "compare", "sweep", "probe"):
        out["grid_n"] = _num(blk, "grid_n", "numerics.grid_n", integer=True, minimum=9, default=257)
        out["psi_tol"] = _num(blk, "psi_tol", "numerics.psi_tol", positive=True, default=1e-10)
        out["mass_tol"] = _num(blk, "mass_tol", "numerics.mass_tol", positive=True, default=1e-10)
        out["max_iter"] = _num(blk, "max_iter", "numerics.max_iter", integer=True, minimum=1, default=200)
        out["dump_fields"] = bool(blk.get("dump_fields", True))
    if scenario in ("kr", "dynamics", "pohozaev", "sweep") or "mfs_tol" in blk:
        out["mfs_tol"] = _num(blk, "mfs_tol", "numerics.mfs_tol", positive=True, default=1e-8)
    if scenario == "probe":
        out["n_trials"] = _num(blk, "n_trials", "numerics.n_trials", integer=True, minimum=1, default=10)
        out["seed"] = _num(blk, "seed", "numerics.seed", integer=True, minimum=0, required=True)
    elif "seed" in blk:
        out["seed"] = _num(blk, "seed", "numerics.seed", integer=True, minimum=0)
    if scenario == "dynamics":
        out["T"] = _num(blk, "T", "numerics.T", positive=True, required=True)
        out["dt"] = _num(blk, "dt", "numerics.dt", positive=True, required=True)
    if scenario == "pohozaev":
        taus = blk.get("tau", [0.1, 0.2])
        out["tau"] = _num_list(taus if isinstance(taus, list) else [taus], "numerics.tau", positive=True)
        out["x0"] = _point(blk.get("x0", [0.0, 0.0]), "numerics.x0")
        out["x1"] = _point(blk.get("x1", [-0.4, 0.1]), "numerics.x1")
        out["n_nodes"] = _num(blk, "n_nodes", "numerics.n_nodes", integer=True, minimum=64, default=256)
    if scenario == "profile":
        out["n_grid"] = 2001
    return out


def load_config(path: Path) -> ScenarioConfig:
    path = Path(path)
    return validate(load_document(path), source=path)
