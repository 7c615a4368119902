"""Bounded sample windows: ingestion, appends with eviction, standardization.

A :class:`TimeWindow` is the only place raw samples ever live. Windows are
immutable values; ``append``/``standardize`` return new windows, so
read-only views can be shared freely while a single logical writer advances
the stream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyFile, MissingColumn, NonNumericCell, ShapeMismatch, TooFewSamples

DEFAULT_WINDOW_CAPACITY = 500

CONSTANT_SD_TOLERANCE = 1e-12


@dataclass(frozen=True)
class VariableSet:
    """Ordered, immutable set of variable names; all matrices index by this order."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise ValueError("a variable set needs at least two variables")
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        if any(not isinstance(n, str) or not n for n in names):
            raise ValueError("variable names must be non-empty strings")

    @property
    def count(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None


def _as_sample_matrix(data, n_vars: int) -> np.ndarray:
    samples = np.array(data, dtype=float, copy=True)
    if samples.ndim != 2 or samples.shape[1] != n_vars:
        raise ShapeMismatch(
            f"expected a T x {n_vars} sample matrix, got shape {samples.shape}"
        )
    bad = ~np.isfinite(samples)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonNumericCell(int(r), str(c), samples[r, c])
    return samples


@dataclass(frozen=True)
class TimeWindow:
    """Bounded buffer of multivariate samples, row = time step.

    ``start_index`` is the global time of row 0; ``start_index + len(window)``
    equals the total number of rows ever delivered, so eviction is the only
    way samples disappear. ``intervention_mask`` marks cells generated under a
    do-intervention on that variable (provenance only).
    """

    variables: VariableSet
    samples: np.ndarray
    start_index: int = 0
    capacity: int | None = None
    intervention_mask: np.ndarray | None = None
    constant_columns: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        samples = _as_sample_matrix(self.samples, self.variables.count)
        if samples.shape[0] < 1:
            raise ShapeMismatch("a window needs at least one row")
        capacity = self.capacity
        if capacity is None:
            capacity = max(samples.shape[0], DEFAULT_WINDOW_CAPACITY)
        if capacity < samples.shape[0]:
            raise ShapeMismatch(
                f"capacity {capacity} smaller than initial row count {samples.shape[0]}"
            )
        mask = self.intervention_mask
        if mask is not None:
            mask = np.array(mask, dtype=bool, copy=True)
            if mask.shape != samples.shape:
                raise ShapeMismatch("intervention mask shape must match samples")
            mask.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "capacity", capacity)
        object.__setattr__(self, "intervention_mask", mask)
        object.__setattr__(self, "constant_columns", tuple(self.constant_columns))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def n_vars(self) -> int:
        return self.variables.count

    def mask_or_false(self) -> np.ndarray:
        if self.intervention_mask is not None:
            return self.intervention_mask
        mask = np.zeros(self.samples.shape, dtype=bool)
        mask.setflags(write=False)
        return mask


def ingest(
    path: str | Path,
    variables: VariableSet,
    format: str = "csv",
    capacity: int | None = None,
) -> TimeWindow:
    """Read a CSV or JSONL file into a fresh window (start_index 0).

    The file's column/field names must cover ``variables``; extra columns are
    ignored. Cells must parse as finite numbers; NaN and infinities are
    rejected, not imputed.
    """
    path = Path(path)
    if format == "csv":
        rows = _read_csv(path, variables)
    elif format == "jsonl":
        rows = _read_jsonl(path, variables)
    else:
        raise ValueError(f"unknown format {format!r} (expected 'csv' or 'jsonl')")
    if not rows:
        raise EmptyFile(f"{path} has no data rows")
    return TimeWindow(variables, np.asarray(rows, dtype=float), start_index=0, capacity=capacity)


def _parse_cell(raw: object, row: int, col: str) -> float:
    try:
        value = float(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise NonNumericCell(row, col, raw) from None
    if not np.isfinite(value):
        raise NonNumericCell(row, col, raw)
    return value


def _read_csv(path: Path, variables: VariableSet) -> list[list[float]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} is empty") from None
        header = [h.strip() for h in header]
        try:
            col_idx = [header.index(name) for name in variables.names]
        except ValueError:
            missing = next(n for n in variables.names if n not in header)
            raise MissingColumn(missing) from None
        rows: list[list[float]] = []
        for r, record in enumerate(reader):
            if not record:
                continue
            row = []
            for name, idx in zip(variables.names, col_idx):
                if idx >= len(record):
                    raise NonNumericCell(r, name, None)
                row.append(_parse_cell(record[idx], r, name))
            rows.append(row)
    return rows


def _read_jsonl(path: Path, variables: VariableSet) -> list[list[float]]:
    rows: list[list[float]] = []
    with path.open(encoding="utf-8") as fh:
        for r, line in enumerate(l for l in fh if l.strip()):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise NonNumericCell(r, "<line>", line.strip()[:40]) from exc
            row = []
            for name in variables.names:
                if name not in obj:
                    raise MissingColumn(name)
                row.append(_parse_cell(obj[name], r, name))
            rows.append(row)
    return rows


def save_trace(window: TimeWindow, path: str | Path, format: str = "csv") -> None:
    """Write the window's samples in a format ``ingest`` reads back exactly.

    Floats are written with shortest round-trip precision, so
    ingest(save_trace(w)) reproduces the samples bit for bit.
    """
    path = Path(path)
    names = window.variables.names
    if format == "csv":
        lines = [",".join(names)]
        for row in window.samples:
            lines.append(",".join(repr(float(v)) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for row in window.samples:
                fh.write(json.dumps(dict(zip(names, (float(v) for v in row)))) + "\n")
    else:
        raise ValueError(f"unknown format {format!r} (expected 'csv' or 'jsonl')")


def append(window: TimeWindow, rows) -> TimeWindow:
    """Append ``rows`` (k x N) and evict the oldest rows past capacity.

    The returned window satisfies len <= capacity and start_index advances by
    exactly the number of evicted rows.
    """
    new_rows = _as_sample_matrix(rows, window.n_vars)
    if new_rows.shape[0] < 1:
        raise ShapeMismatch("append needs at least one row")
    combined = np.vstack([window.samples, new_rows])
    mask = np.vstack([window.mask_or_false(), np.zeros(new_rows.shape, dtype=bool)])
    overflow = max(0, combined.shape[0] - window.capacity)
    if overflow:
        combined = combined[overflow:]
        mask = mask[overflow:]
    return TimeWindow(
        window.variables,
        combined,
        start_index=window.start_index + overflow,
        capacity=window.capacity,
        intervention_mask=mask if mask.any() else None,
        constant_columns=(),
    )


def standardize(window: TimeWindow) -> TimeWindow:
    """Scale each column to mean 0, population standard deviation 1.

    Constant columns (sd <= 1e-12) map to all-zeros and are flagged in
    ``constant_columns``. Idempotent within 1e-9 per element.
    """
    if len(window) < 2:
        raise TooFewSamples("standardize needs at least 2 rows")
    samples = window.samples
    mean = samples.mean(axis=0)
    sd = samples.std(axis=0)  # population sd: correlation downstream is scale-free
    constant = sd <= CONSTANT_SD_TOLERANCE
    safe_sd = np.where(constant, 1.0, sd)
    out = (samples - mean) / safe_sd
    out[:, constant] = 0.0
    return replace(
        window,
        samples=out,
        constant_columns=tuple(int(i) for i in np.flatnonzero(constant)),
    )


def slice_window(window: TimeWindow, start: int, stop: int, capacity: int | None = None) -> TimeWindow:
    """Carve rows [start, stop) out of a longer trace as an independent window."""
    if not (0 <= start < stop <= len(window)):
        raise ShapeMismatch(f"slice [{start}, {stop}) outside window of length {len(window)}")
    mask = window.intervention_mask
    return TimeWindow(
        window.variables,
        window.samples[start:stop],
        start_index=window.start_index + start,
        capacity=capacity,
        intervention_mask=None if mask is None else mask[start:stop],
    )
