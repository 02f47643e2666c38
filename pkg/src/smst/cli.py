"""Command-line front end: preset selection, dotted-path overrides,
experiment dispatch, and CSV/JSON artifact emission.

    smst <experiment> [--preset P] [--set path=value]... [--out DIR] [--format csv,json]
    smst list {experiments|presets}

The SMST_OUT environment variable overrides the default output root.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SmstError
from .experiments import REGISTRY
from .models import presets as preset_registry

ARTIFACT_VERSION = 1


class OverrideError(ValueError):
    pass


def _parse_value(text: str, reference):
    """Parse an override against the type of the value it replaces."""
    if isinstance(reference, bool):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise OverrideError(f"expected a boolean, got {text!r}")
    if isinstance(reference, int) and not isinstance(reference, bool):
        try:
            return int(text)
        except ValueError:
            raise OverrideError(f"expected an integer, got {text!r}") from None
    if isinstance(reference, float):
        try:
            return float(text)
        except ValueError:
            raise OverrideError(f"expected a number, got {text!r}") from None
    if isinstance(reference, str):
        return text
    if isinstance(reference, (list, tuple)):
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            raise OverrideError(f"expected a JSON list, got {text!r}") from None
        if not isinstance(value, list):
            raise OverrideError(f"expected a JSON list, got {text!r}")
        return value
    raise OverrideError(f"cannot override a value of type {type(reference).__name__}")


#: Option groups every experiment forwards as keyword dicts; overrides may
#: introduce keys here even when the preset leaves the group empty.
_OPTION_GROUPS = ("smst", "ivp", "model")


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply ``path=value`` overrides with dotted paths; unknown paths are
    hard errors, and values must type-check against what they replace."""
    out = json.loads(json.dumps(config))  # deep copy of plain data
    for item in overrides:
        if "=" not in item:
            raise OverrideError(f"override {item!r} is not of the form path=value")
        path, text = item.split("=", 1)
        keys = path.split(".")
        node = out
        for depth, key in enumerate(keys[:-1]):
            if not isinstance(node, dict):
                raise OverrideError(f"unknown override path {path!r}")
            if key not in node:
                if depth == 0 and key in _OPTION_GROUPS:
                    node[key] = {}
                else:
                    raise OverrideError(f"unknown override path {path!r}")
            node = node[key]
        leaf = keys[-1]
        if not isinstance(node, dict):
            raise OverrideError(f"unknown override path {path!r}")
        if leaf in node:
            reference = node[leaf]
            if isinstance(reference, dict):
                raise OverrideError(f"override path {path!r} names a group, not a value")
            node[leaf] = _parse_value(text, reference)
        elif len(keys) > 1 and keys[0] in _OPTION_GROUPS:
            try:
                node[leaf] = json.loads(text)
            except json.JSONDecodeError:
                node[leaf] = text
        else:
            raise OverrideError(f"unknown override path {path!r}")
    return out


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_outputs(result, outdir: Path, formats) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    files = {}
    if "csv" in formats:
        for name, table in result.tables.items():
            path = outdir / f"{name}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(table.columns)
                for row in table.rows:
                    writer.writerow([_format_float(v) for v in row])
            files[name] = path.name
    if "json" in formats:
        summary = {
            "artifact_version": ARTIFACT_VERSION,
            "package_version": __version__,
            "experiment": result.name,
            "inputs": result.inputs,
            "summary": result.summary,
            "provenance": result.provenance,
            "tables": sorted(result.tables),
            "files": files,
        }
        with open(outdir / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    return files


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _error_json(code: int, message: str, **extra) -> int:
    payload = {"error": message, "exit_code": code}
    payload.update(extra)
    print(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    return code


def run_experiment(experiment: str, preset_name: str | None, overrides, outdir, formats):
    if experiment not in REGISTRY:
        return _error_json(
            2, f"unknown experiment {experiment!r}", candidates=sorted(REGISTRY)
        )
    if preset_name is None:
        matching = [p.name for p in preset_registry.all_presets() if p.experiment == experiment]
        if len(matching) != 1:
            return _error_json(
                2,
                f"experiment {experiment!r} needs an explicit --preset",
                candidates=matching,
            )
        preset_name = matching[0]
    try:
        preset = preset_registry.get(preset_name)
    except KeyError:
        return _error_json(
            2, f"unknown preset {preset_name!r}", candidates=preset_registry.names()
        )
    if preset.experiment != experiment:
        return _error_json(
            2,
            f"preset {preset_name!r} belongs to experiment {preset.experiment!r}",
            candidates=[p.name for p in preset_registry.all_presets() if p.experiment == experiment],
        )
    try:
        config = apply_overrides(preset.config, overrides)
    except OverrideError as exc:
        return _error_json(2, str(exc))

    runner = REGISTRY[experiment][0]
    try:
        result = runner(**config)
    except SmstError as exc:
        diag = Path(outdir) / "error.json"
        diag.parent.mkdir(parents=True, exist_ok=True)
        with open(diag, "w", encoding="utf-8") as fh:
            json.dump(
                {"error": str(exc), "experiment": experiment, "preset": preset_name,
                 "config": config},
                fh, indent=2, sort_keys=True, default=_json_default,
            )
            fh.write("\n")
        return _error_json(1, str(exc), diagnostics=str(diag))

    result.inputs = {
        "experiment": experiment,
        "preset": preset_name,
        "overrides": list(overrides),
        "config": config,
    }
    write_outputs(result, Path(outdir), formats)
    print(json.dumps({"experiment": experiment, "preset": preset_name,
                      "out": str(outdir), "tables": sorted(result.tables)}))
    return 0


def list_kind(kind: str) -> int:
    if kind == "experiments":
        for name in sorted(REGISTRY):
            print(f"{name:18s} {REGISTRY[name][1]}")
        return 0
    if kind == "presets":
        for preset in preset_registry.all_presets():
            print(f"{preset.name:16s} [{preset.experiment}] {preset.description} "
                  f"(figure: {preset.figure})")
        return 0
    return _error_json(2, f"unknown listing {kind!r}", candidates=["experiments", "presets"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smst",
        description="Slow-manifold boundary-value experiments",
    )
    parser.add_argument("--version", action="version", version=f"smst {__version__}")
    sub = parser.add_subparsers(dest="command")

    list_p = sub.add_parser("list", help="list experiments or presets")
    list_p.add_argument("kind", choices=["experiments", "presets"])

    for name, (_, help_line) in sorted(REGISTRY.items()):
        exp_p = sub.add_parser(name, help=help_line)
        exp_p.add_argument("--preset", default=None)
        exp_p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE"
        )
        exp_p.add_argument("--out", default=None)
        exp_p.add_argument("--format", default="csv,json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command is None:
        build_parser().print_help()
        return 2
    if args.command == "list":
        return list_kind(args.kind)
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    bad = [f for f in formats if f not in ("csv", "json")]
    if bad:
        return _error_json(2, f"unknown formats {bad}", candidates=["csv", "json"])
    out_root = os.environ.get("SMST_OUT", "runs")
    outdir = Path(args.out) if args.out else Path(out_root) / args.command
    return run_experiment(args.command, args.preset, args.overrides, outdir, formats)


if __name__ == "__main__":
    sys.exit(main())
