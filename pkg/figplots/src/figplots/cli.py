"""Command-line figure regeneration from smst run directories.

    render_figures <run-dir> [--figure ID]... [--format png|pdf|svg] [--out DIR]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURES, figures_for_run, render
from .io import RunDir, RunDirectoryError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Regenerate figures from smst CSV/JSON run artifacts",
    )
    parser.add_argument("run_dir")
    parser.add_argument(
        "--figure", action="append", default=[], metavar="ID",
        help=f"figure id ({', '.join(sorted(FIGURES))}); default: all applicable",
    )
    parser.add_argument("--format", default="png", choices=["png", "pdf", "svg"])
    parser.add_argument("--out", default=None, help="output directory (default: run dir)")
    args = parser.parse_args(argv)

    try:
        run = RunDir(args.run_dir)
    except RunDirectoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    wanted = args.figure or figures_for_run(run)
    if not wanted:
        print(
            f"error: no figures apply to experiment {run.experiment!r} in {args.run_dir}",
            file=sys.stderr,
        )
        return 2
    unknown = [f for f in wanted if f not in FIGURES]
    if unknown:
        print(
            f"error: unknown figure ids {unknown}; available: {sorted(FIGURES)}",
            file=sys.stderr,
        )
        return 2

    out_dir = Path(args.out) if args.out else Path(args.run_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = 0
    for figure_id in wanted:
        target = out_dir / f"{figure_id}.{args.format}"
        try:
            render(figure_id, run, target, args.format)
        except RunDirectoryError as exc:
            print(f"error: {figure_id}: {exc}", file=sys.stderr)
            if target.exists():
                target.unlink()
            status = 2
            continue
        print(f"wrote {target}")
    return status


if __name__ == "__main__":
    sys.exit(main())
