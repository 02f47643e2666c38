"""Reading smst run directories: labeled CSV tables plus the JSON summary."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class RunDirectoryError(RuntimeError):
    """The run directory lacks the tables a figure needs."""


def read_table(path: Path) -> dict[str, np.ndarray]:
    """A CSV table as a mapping from bare column name to values.

    Headers carry ``name [unit]`` labels; both the full label and the bare
    name key the returned mapping.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    data = np.array(rows) if rows else np.empty((0, len(header)))
    out: dict[str, np.ndarray] = {}
    for i, label in enumerate(header):
        column = data[:, i] if data.size else np.empty(0)
        out[label] = column
        out[label.rsplit(" [", 1)[0]] = column
    return out


class RunDir:
    """Lazy view of one experiment run directory."""

    def __init__(self, root):
        self.root = Path(root)
        summary_path = self.root / "summary.json"
        if not summary_path.exists():
            raise RunDirectoryError(
                f"{self.root} has no summary.json; produce a run with the smst CLI first"
            )
        self.summary = json.loads(summary_path.read_text())
        self._tables: dict[str, dict[str, np.ndarray]] = {}

    @property
    def experiment(self) -> str:
        return self.summary.get("experiment", "")

    def table(self, name: str, needed_for: str = "") -> dict[str, np.ndarray]:
        if name not in self._tables:
            path = self.root / f"{name}.csv"
            if not path.exists():
                hint = self.summary.get("inputs", {})
                cmd = (
                    f"smst {hint.get('experiment', '<experiment>')} "
                    f"--preset {hint.get('preset', '<preset>')}"
                )
                raise RunDirectoryError(
                    f"table {name!r} missing from {self.root}"
                    + (f" (needed for {needed_for})" if needed_for else "")
                    + f"; regenerate the run with: {cmd}"
                )
            self._tables[name] = read_table(path)
        return self._tables[name]
