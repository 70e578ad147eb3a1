"""Command line entry point: ``molcat run|validate|list-scenarios``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, SCENARIO_NOTES, SCENARIOS, load_config, preset_config
from .errors import ConfigError, MolcatError, MonitorError, TruncationError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and obj != obj:
        return None
    return obj


def _fmt_cell(v, precision):
    return format(float(v), f".{precision}g")


def write_table(table, out_dir: Path, fmt: str, precision: int, timestamp: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = dict(_jsonable(table.manifest), name=table.name, columns=list(table.columns),
                    version=__version__, timestamp=timestamp)
    if fmt == "csv":
        path = out_dir / f"{table.name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_fmt_cell(v, precision) for v in row])
        mpath = out_dir / f"{table.name}.manifest.json"
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return [path, mpath]
    path = out_dir / f"{table.name}.json"
    rows = [[None if v != v else float(_fmt_cell(v, precision)) for v in row] for row in table.rows]
    doc = dict(name=table.name, columns=list(table.columns), rows=rows, manifest=manifest)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return [path]


def _load(path: str):
    if path in SCENARIOS and not Path(path).exists():
        return preset_config(path)
    return load_config(path)


def _apply_flags(cfg, args):
    out = cfg.output
    if getattr(args, "out", None):
        out = replace(out, dir=args.out)
    if getattr(args, "format", None):
        out = replace(out, format=args.format)
    return replace(cfg, output=out)


def cmd_list(args) -> int:
    for name in SCENARIOS:
        print(f"{name:8s} {PRESETS[name]['kind'] or '-':11s} {SCENARIO_NOTES[name]}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .scenarios import validation_report

    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rep = validation_report(cfg)
    for msg in rep["errors"]:
        print(f"error: {msg}")
    for msg in rep["warnings"]:
        print(f"warning: {msg}")
    print(f"{cfg.scenario}: {len(rep['errors'])} error(s), {len(rep['warnings'])} warning(s)")
    return EXIT_INVALID if rep["errors"] else EXIT_OK


def cmd_run(args) -> int:
    from .scenarios import run_scenario, validation_report

    try:
        cfg = _apply_flags(_load(args.config), args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rep = validation_report(cfg)
    if rep["errors"]:
        for msg in rep["errors"]:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    for msg in rep["warnings"]:
        print(f"warning: {msg}", file=sys.stderr)
    try:
        tables = run_scenario(cfg, threads=args.threads)
    except (MonitorError, TruncationError) as exc:
        where = f" at t = {exc.time:.6g}" if getattr(exc, "time", None) is not None else ""
        print(f"error: scenario {cfg.scenario}{where}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except MolcatError as exc:
        print(f"error: scenario {cfg.scenario}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    out_dir = Path(cfg.output.dir)
    for tb in tables:
        for p in write_table(tb, out_dir, cfg.output.format, int(cfg.output.precision), stamp):
            print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="molcat", description="Entangled cat states in molecular cavity QED")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config (or a preset name)")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--threads", type=int, default=1, help="worker processes for independent runs")
    run.add_argument("--seedless", action="store_true", help=argparse.SUPPRESS)
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    ls = sub.add_parser("list-scenarios", help="list the built-in presets")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "seedless", False):
        print("error: --seedless is reserved; the simulations use no random numbers", file=sys.stderr)
        return EXIT_INVALID
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
