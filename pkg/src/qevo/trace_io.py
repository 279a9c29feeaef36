"""Raw trace parsing and fixed-interval aggregation.

Traces are CSV-like files with one usage sample per row. A column mapping
names (or indexes) the timestamp and value columns so that different
cluster-trace exports and synthetic files all flow through one parser.
Aggregation buckets samples into prediction intervals and fills gaps by
linear interpolation so the downstream windowing sees a contiguous series.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AllBucketsEmptyError,
    EmptyTraceError,
    InputError,
    MalformedRowError,
)


class Resource(str, enum.Enum):
    CPU = "cpu"
    MEMORY = "memory"


@dataclass(frozen=True)
class TraceFormat:
    """Column mapping for a trace file.

    `timestamp_col` / `value_col` are header names when `header` is true,
    otherwise zero-based column indexes (integers, or digit strings).
    """

    timestamp_col: str | int = "timestamp"
    value_col: str | int = "value"
    delimiter: str = ","
    header: bool = True
    machine_id: str = "unknown"
    resource: Resource = Resource.CPU


@dataclass(frozen=True)
class RawTrace:
    """Timestamped usage samples for one machine/resource kind.

    Samples are (seconds-since-epoch, usage) pairs with strictly increasing
    timestamps and finite, non-negative values; at least two samples.
    """

    machine_id: str
    resource: Resource
    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.samples) < 2:
            raise EmptyTraceError(
                f"trace needs at least 2 samples, got {len(self.samples)}"
            )
        prev = -math.inf
        for t, v in self.samples:
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ValueError(f"non-finite sample ({t}, {v})")
            if v < 0:
                raise ValueError(f"negative usage value {v} at t={t}")
            if t <= prev:
                raise ValueError(f"timestamps not strictly increasing at t={t}")
            prev = t


@dataclass(frozen=True)
class AggregatedSeries:
    """Per-interval usage means; `interval_minutes` is the prediction interval."""

    interval_minutes: int
    values: tuple[float, ...]

    def __post_init__(self):
        if self.interval_minutes < 1:
            raise ValueError("interval_minutes must be >= 1")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("aggregated values must be finite")


def _resolve_column(mapping: str | int, fieldnames: list[str] | None, what: str) -> int:
    """Turn a column name or index into a positional index."""
    if isinstance(mapping, int):
        return mapping
    if isinstance(mapping, str) and mapping.lstrip("-").isdigit():
        return int(mapping)
    if fieldnames is None:
        raise InputError(f"{what} column {mapping!r} needs a header row")
    try:
        return fieldnames.index(mapping)
    except ValueError:
        raise InputError(f"{what} column {mapping!r} not found in header {fieldnames}")


def parse_trace(path: str | Path, fmt: TraceFormat | None = None) -> RawTrace:
    """Parse a trace file into a RawTrace.

    Rows are sorted by timestamp and duplicate timestamps are averaged.
    Raises FileNotFoundError, MalformedRowError (with the 1-based data row
    index), or EmptyTraceError.
    """
    fmt = fmt or TraceFormat()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"trace file not found: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=fmt.delimiter)
        fieldnames = None
        if fmt.header:
            try:
                fieldnames = [c.strip() for c in next(reader)]
            except StopIteration:
                raise EmptyTraceError(f"no rows in {path}")
        t_idx = _resolve_column(fmt.timestamp_col, fieldnames, "timestamp")
        v_idx = _resolve_column(fmt.value_col, fieldnames, "value")

        by_time: dict[float, list[float]] = {}
        for row_index, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(t_idx, v_idx):
                raise MalformedRowError(row_index, f"expected >= {max(t_idx, v_idx) + 1} columns, got {len(row)}")
            try:
                t = float(row[t_idx])
                v = float(row[v_idx])
            except ValueError as exc:
                raise MalformedRowError(row_index, str(exc))
            if not (math.isfinite(t) and math.isfinite(v)):
                raise MalformedRowError(row_index, f"non-finite sample ({t}, {v})")
            if v < 0:
                raise MalformedRowError(row_index, f"negative usage value {v}")
            by_time.setdefault(t, []).append(v)

    if not by_time:
        raise EmptyTraceError(f"no data rows in {path}")
    samples = tuple(
        (t, sum(vs) / len(vs)) for t, vs in sorted(by_time.items())
    )
    return RawTrace(machine_id=fmt.machine_id, resource=fmt.resource, samples=samples)


def aggregate(trace: RawTrace, interval_minutes: int) -> AggregatedSeries:
    """Bucket a trace into interval means.

    Bucket b covers [b*PI, (b+1)*PI) on the absolute time axis; the output
    runs from the first to the last occupied bucket. Empty interior buckets
    are filled by linear interpolation between their non-empty neighbours;
    empty edge buckets copy the nearest non-empty value.
    """
    if interval_minutes < 1:
        raise ValueError("interval_minutes must be >= 1")
    width = interval_minutes * 60.0
    times = np.array([t for t, _ in trace.samples], dtype=float)
    values = np.array([v for _, v in trace.samples], dtype=float)

    buckets = np.floor(times / width).astype(np.int64)
    first, last = int(buckets[0]), int(buckets[-1])
    n_buckets = last - first + 1
    sums = np.zeros(n_buckets)
    counts = np.zeros(n_buckets)
    np.add.at(sums, buckets - first, values)
    np.add.at(counts, buckets - first, 1.0)

    occupied = counts > 0
    if not occupied.any():
        raise AllBucketsEmptyError("no samples landed in any bucket")
    means = np.full(n_buckets, np.nan)
    means[occupied] = sums[occupied] / counts[occupied]
    if not occupied.all():
        idx = np.arange(n_buckets)
        means = np.interp(idx, idx[occupied], means[occupied])

    return AggregatedSeries(
        interval_minutes=interval_minutes, values=tuple(float(v) for v in means)
    )
