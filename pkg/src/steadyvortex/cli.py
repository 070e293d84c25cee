"""Command-line entry point: ``run <config>``, ``accept <dir>``, ``inspect <artifact>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ScenarioConfig, load_config, validate
from .errors import ConfigInvalid, SteadyVortexError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def execute(cfg: ScenarioConfig) -> int:
    """Run a validated configuration and write its manifest."""
    from .scenarios import run

    out = cfg.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _err(f"error: cannot create output directory: {exc}")
        return EXIT_IO
    try:
        warned = run(cfg, out)
    except SteadyVortexError as exc:
        _err(f"solver failure ({type(exc).__name__}): {exc}")
        return EXIT_SOLVER
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    try:
        io.write_manifest(out, cfg.resolved(), {"warnings": warned})
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    return EXIT_OK


def _config_error(exc: ConfigInvalid) -> int:
    _err(f"invalid configuration [{exc.field}]: {exc}")
    return EXIT_CONFIG


def run_scenario(config_path) -> int:
    try:
        cfg = load_config(Path(config_path))
    except ConfigInvalid as exc:
        return _config_error(exc)
    return execute(cfg)


def run_scenario_dict(doc: dict) -> int:
    """Same as :func:`run_scenario` for an in-memory document."""
    try:
        cfg = validate(doc)
    except ConfigInvalid as exc:
        return _config_error(exc)
    return execute(cfg)


def emit_acceptance_suite(output_dir) -> int:
    from . import acceptance

    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        _err(f"error: output directory not writable: {exc}")
        return EXIT_IO
    results = []
    for fn in acceptance.CRITERIA:
        res = fn(out / "determinism") if fn is acceptance.criterion_12 else fn()
        print(res.line(), flush=True)
        for f in res.failures():
            print(f"    {f}", flush=True)
        results.append(res)
    failed = [r.number for r in results if not r.passed]
    summary = {
        "criteria": [r.to_record() for r in results],
        "failed": failed,
        "passed": not failed,
    }
    try:
        io.write_json(out / "acceptance.json", summary)
        io.write_manifest(out, {"command": "accept"}, None)
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    return EXIT_OK if not failed else EXIT_FAILED


def inspect_artifact(path) -> int:
    path = Path(path)
    if not path.is_file():
        _err(f"error: no such file: {path}")
        return EXIT_IO
    try:
        if path.name == io.MANIFEST:
            bad = io.verify_manifest(path)
            n = len(io.read_json(path).get("artifacts", []))
            print(f"manifest: {n} artifacts, {len(bad)} mismatched")
            for b in bad:
                print(f"  mismatch: {b}")
            return EXIT_OK if not bad else EXIT_FAILED
        if path.suffix == ".json":
            print(json.dumps(io.read_json(path), indent=2, sort_keys=True))
        elif path.suffix == ".csv":
            rows = io.read_csv(path)
            cols = list(rows[0].keys()) if rows else []
            print(f"columns: {', '.join(cols)}")
            print(f"rows: {len(rows)}")
        elif path.suffix == ".bin":
            arr, meta = io.read_field(path)
            print(f"field: {meta['field_name']}  shape: {meta['ny']} x {meta['nx']}  bbox: {meta['bbox']}")
            print(f"min: {float(np.nanmin(arr))!r}  max: {float(np.nanmax(arr))!r}")
        else:
            _err(f"error: unknown artifact type {path.suffix!r}")
            return EXIT_FAILED
    except (OSError, ValueError, KeyError) as exc:
        _err(f"error: cannot read {path}: {exc}")
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steadyvortex", description="Concentrated steady vortex experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario from a JSON or TOML configuration")
    p.add_argument("config")
    p = sub.add_parser("accept", help="run the acceptance matrix and write a summary")
    p.add_argument("dir")
    p = sub.add_parser("inspect", help="summarize an artifact or verify a manifest")
    p.add_argument("artifact")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_scenario(args.config)
    if args.command == "accept":
        return emit_acceptance_suite(args.dir)
    return inspect_artifact(args.artifact)


if __name__ == "__main__":
    sys.exit(main())
