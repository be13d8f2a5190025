"""Encounter trace parsing and per-pair contact statistics.

Canonical trace format is UTF-8 CSV with the header ``node_a,node_b,start,end``
and times in seconds. Real datasets are converted to this format outside the
package.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable

from .errors import TraceFormatError, TraceParseError

HEADER = ["node_a", "node_b", "start", "end"]


@dataclass(frozen=True)
class EncounterRecord:
    node_a: str
    node_b: str
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def pair(self) -> tuple[str, str]:
        return canonical_pair(self.node_a, self.node_b)


@dataclass(frozen=True)
class ContactStats:
    pair: tuple[str, str]
    n_encounters: int
    mean_duration: float
    var_duration: float


def canonical_pair(a, b):
    return (a, b) if a <= b else (b, a)


def _open_text(source):
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    if hasattr(source, "read"):
        return io.TextIOWrapper(source, encoding="utf-8", newline="")
    raise TypeError(f"unsupported trace source {type(source).__name__}")


def parse_trace(source: bytes | IO) -> list[EncounterRecord]:
    """Parse a canonical CSV trace into encounter records, in file order.

    ``source`` may be raw bytes, a binary stream or a text stream. Raises
    :class:`TraceFormatError` for a missing or wrong header and
    :class:`TraceParseError` (carrying the 1-based line number) for a bad
    data line.
    """
    reader = csv.reader(_open_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty trace: missing header") from None
    if [h.strip() for h in header] != HEADER:
        raise TraceFormatError(f"expected header {','.join(HEADER)!r}, got {','.join(header)!r}")

    records = []
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != 4:
            raise TraceParseError(lineno, f"expected 4 fields, got {len(row)}")
        a, b = row[0].strip(), row[1].strip()
        try:
            start, end = float(row[2]), float(row[3])
        except ValueError:
            raise TraceParseError(lineno, "non-numeric time") from None
        if not (math.isfinite(start) and math.isfinite(end)):
            raise TraceParseError(lineno, "non-finite time")
        if start < 0:
            raise TraceParseError(lineno, "negative start time")
        if end <= start:
            raise TraceParseError(lineno, "end must be after start")
        if not a or not b:
            raise TraceParseError(lineno, "empty node identifier")
        if a == b:
            raise TraceParseError(lineno, f"self-contact of node {a!r}")
        records.append(EncounterRecord(a, b, start, end))
    return records


def read_trace(path) -> list[EncounterRecord]:
    with open(path, "rb") as fh:
        return parse_trace(fh.read())


def write_trace(records: Iterable[EncounterRecord], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(HEADER)
    for r in records:
        writer.writerow([r.node_a, r.node_b, repr(r.start), repr(r.end)])


def aggregate_contacts(records: Iterable[EncounterRecord]) -> dict[tuple[str, str], ContactStats]:
    """Per unordered pair: encounter count, mean and population variance of duration."""
    durations: dict[tuple[str, str], list[float]] = {}
    for r in records:
        durations.setdefault(r.pair, []).append(r.duration)

    stats = {}
    for pair in sorted(durations):
        xs = sorted(durations[pair])  # order-independent summation
        n = len(xs)
        if xs[0] == xs[-1]:
            mean, var = xs[0], 0.0
        else:
            mean = math.fsum(xs) / n
            var = math.fsum((x - mean) ** 2 for x in xs) / n
        stats[pair] = ContactStats(pair, n, mean, var)
    return stats


def merge_stats(a: ContactStats, b: ContactStats) -> ContactStats:
    """Combine statistics of two disjoint record sets for the same pair."""
    if a.pair != b.pair:
        raise ValueError("cannot merge statistics of different pairs")
    n = a.n_encounters + b.n_encounters
    mean = (a.n_encounters * a.mean_duration + b.n_encounters * b.mean_duration) / n
    delta = b.mean_duration - a.mean_duration
    var = (
        a.n_encounters * a.var_duration
        + b.n_encounters * b.var_duration
        + delta * delta * a.n_encounters * b.n_encounters / n
    ) / n
    return ContactStats(a.pair, n, mean, var)
