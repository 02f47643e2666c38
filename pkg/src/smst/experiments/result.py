"""Result containers for experiments: labeled numeric tables plus scalar
metrics and solver provenance."""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

_LABEL_RE = re.compile(r"^\S.*\s\[[^\[\]]+\]$")


@dataclass(frozen=True)
class Table:
    """A column-labeled numeric table; every label carries a unit suffix
    like ``"v [1]"`` or ``"t [slow time]"``."""

    columns: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if rows.size == 0:
            rows = rows.reshape(0, len(self.columns))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "columns", tuple(self.columns))
        if rows.shape[1] != len(self.columns):
            raise ValueError(
                f"row width {rows.shape[1]} does not match {len(self.columns)} columns"
            )
        for label in self.columns:
            if not _LABEL_RE.match(label):
                raise ValueError(f"column label {label!r} lacks a [unit] suffix")

    def column(self, name: str) -> np.ndarray:
        """Column by full label or by bare name (unit suffix stripped)."""
        for i, label in enumerate(self.columns):
            if label == name or label.rsplit(" [", 1)[0] == name:
                return self.rows[:, i]
        raise KeyError(name)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def table_from_records(columns: Sequence[str], records: Iterable[Sequence[float]]) -> Table:
    recs = [tuple(float(v) for v in r) for r in records]
    arr = np.array(recs, dtype=float) if recs else np.empty((0, len(columns)))
    return Table(tuple(columns), arr)


@dataclass
class ExperimentResult:
    name: str
    inputs: dict
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    provenance: list[dict] = field(default_factory=list)

    def __post_init__(self):
        for key, value in self.summary.items():
            if isinstance(value, (int, float)) and not np.isfinite(value):
                raise ValueError(f"summary metric {key!r} is not finite")

    def add_table(self, name: str, columns: Sequence[str], records) -> Table:
        tab = table_from_records(columns, records)
        self.tables[name] = tab
        return tab

    def add_report(self, label: str, report) -> None:
        entry = {"label": label}
        entry.update(report.as_dict())
        self.provenance.append(entry)


def map_indexed(fn: Callable, inputs: Sequence, workers: int = 1) -> list:
    """Apply ``fn`` to every input, results ordered by input index.

    ``workers > 1`` runs the (pure) tasks on a thread pool; the output order
    is by index regardless of completion order, so results are identical to
    the serial path.
    """
    if workers <= 1:
        return [fn(x) for x in inputs]
    out = [None] * len(inputs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, x): i for i, x in enumerate(inputs)}
        for fut, i in futures.items():
            out[i] = fut.result()
    return out
