"""CSV ingestion, standardisation, and result serialisation.

CSV files are row-per-time-point (the common sensor-log export layout); the
in-memory matrix is variables-by-time, so loading transposes.  All file
writes go through a write-temp-then-rename step so partially written outputs
are never observed.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import BenchmarkReport

__all__ = [
    "load_csv",
    "standardize",
    "ResultDocument",
    "write_text_atomic",
    "write_json_atomic",
    "write_matrix_csv",
    "write_benchmark_csv",
]


def load_csv(
    path,
    has_header: bool = False,
    time_column: int | str | None = None,
    delimiter: str = ",",
) -> np.ndarray:
    """Load a rectangular numeric CSV into a ``p x n`` matrix.

    Rows of the file are time points and columns are variables; the result
    is transposed so the first axis indexes variables.  ``time_column``
    drops one column before parsing (an integer position, or a name when
    ``has_header`` is set).  Parse errors name the offending cell with
    1-based file coordinates.
    """
    path = Path(path)
    rows: list[list[float]] = []
    width: int | None = None
    drop_idx: int | None = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, record in enumerate(reader, start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if lineno == 1:
                if isinstance(time_column, str):
                    if not has_header:
                        raise ValueError(
                            "a named time_column requires has_header=True"
                        )
                    try:
                        drop_idx = [c.strip() for c in record].index(time_column)
                    except ValueError:
                        raise ValueError(
                            f"time column {time_column!r} not found in header"
                        ) from None
                elif time_column is not None:
                    drop_idx = int(time_column)
                if has_header:
                    continue
            if drop_idx is not None:
                if drop_idx >= len(record):
                    raise ValueError(
                        f"row {lineno} has no column {drop_idx} to drop"
                    )
                record = record[:drop_idx] + record[drop_idx + 1 :]
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ValueError(
                    f"ragged input: row {lineno} has {len(record)} cells, expected {width}"
                )
            values = []
            for col, cell in enumerate(record, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"non-numeric cell {cell.strip()!r} at row {lineno}, column {col}"
                    ) from None
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float).T


def standardize(X) -> np.ndarray:
    """Centre each variable and scale it to unit sample standard deviation.

    Constant rows are centred but left unscaled, with a warning.  Idempotent
    on non-constant rows up to floating round-off.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("need a 2-d matrix with at least two time points")
    centred = X - X.mean(axis=1, keepdims=True)
    sd = X.std(axis=1, ddof=1, keepdims=True)
    flat = (sd == 0).ravel()
    if flat.any():
        warnings.warn(
            f"{int(flat.sum())} constant row(s) were centred but not scaled",
            stacklevel=2,
        )
    sd[sd == 0] = 1.0
    return centred / sd


@dataclass
class ResultDocument:
    """Serialisable record of one detection run.

    ``changepoints`` are split offsets (the count of points at or before
    each break).  ``loss_curve`` rows are ``{"k", "loss", "penalized"}``
    with ``penalized = loss + mu * k * log(n)``; it is empty when the run
    used a fixed ``mu`` and therefore never built the curve.
    ``scan_profiles`` records each scanned segment as
    ``{"segment": [s, e], "candidates": [...], "statistics": [...]}``.
    """

    changepoints: list[int]
    lam: float
    mu: float | None
    d: int
    loss_curve: list[dict] = field(default_factory=list)
    scan_profiles: list[dict] = field(default_factory=list)
    segments: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "changepoints": [int(t) for t in self.changepoints],
            "lambda": self.lam,
            "mu": self.mu,
            "d": self.d,
            "loss_curve": self.loss_curve,
            "scan_profiles": self.scan_profiles,
            "segments": self.segments,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ResultDocument":
        return cls(
            changepoints=[int(t) for t in payload["changepoints"]],
            lam=payload["lambda"],
            mu=payload["mu"],
            d=payload["d"],
            loss_curve=list(payload.get("loss_curve", [])),
            scan_profiles=list(payload.get("scan_profiles", [])),
            segments=list(payload.get("segments", [])),
            config=dict(payload.get("config", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResultDocument":
        return cls.from_dict(json.loads(text))


def write_text_atomic(path, text: str) -> None:
    """Write a file via a temporary sibling and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path, payload: dict) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2) + "\n")


def write_matrix_csv(path, X) -> None:
    """Write a ``p x n`` matrix as row-per-time CSV at full precision."""
    X = np.asarray(X, dtype=float)
    lines = [",".join(repr(float(v)) for v in col) for col in X.T]
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_benchmark_csv(path, report: BenchmarkReport) -> None:
    """Tabulate a benchmark report: one row per (p, d), scenario columns."""
    scenarios = sorted({r.scenario for r in report.rows})
    keys = sorted({(r.p, r.d) for r in report.rows})
    by_cell = {(r.p, r.d, r.scenario): r for r in report.rows}
    header = ["p", "d"]
    for sc in scenarios:
        header += [f"{sc}_tnc", f"{sc}_tnc_rate", f"{sc}_vm", f"{sc}_completed"]
    lines = [",".join(header)]
    for p, d in keys:
        cells: list[str] = [str(p), str(d)]
        for sc in scenarios:
            row = by_cell.get((p, d, sc))
            if row is None:
                cells += ["", "", "", ""]
            else:
                cells += [
                    str(row.tnc_count),
                    repr(round(row.tnc_rate, 6)),
                    repr(round(row.mean_vm, 6)),
                    str(row.completed),
                ]
        lines.append(",".join(cells))
    write_text_atomic(path, "\n".join(lines) + "\n")
