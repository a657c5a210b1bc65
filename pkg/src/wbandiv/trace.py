"""Trace ingestion: record parsing, grid alignment, imputation, reciprocity.

Raw input is a record CSV with header ``time_ms,tx,rx,rssi_dbm``, one row
per decoded packet; a packet that was never decoded simply has no row.
Records are aligned onto the uniform TDMA sampling grid (one sample per
link every ``delta_ms``, default 15 ms), with missing samples held as NaN
until :func:`impute_missing` replaces them with a below-sensitivity floor.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import IO, Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import ConfigurationError, MissingLinkError, ParseError, SchemaError
from .nodes import LinkKey, Node, link_from_label, link_sort_key, node_from_label

RECORD_HEADER = ("time_ms", "tx", "rx", "rssi_dbm")
DEFAULT_DELTA_MS = 15.0
DEFAULT_FLOOR_DB = -102.0
GAIN_MIN_DB = -110.0
GAIN_MAX_DB = 0.0


class Record(NamedTuple):
    time_ms: float
    tx: Node
    rx: Node
    gain_db: float

    @property
    def link(self) -> LinkKey:
        return LinkKey(self.tx, self.rx)


@dataclass(frozen=True, eq=False)
class ChannelTraceSet:
    """Per-link gain series on a shared uniform grid. NaN marks a missing sample.

    Immutable after construction (arrays are read-only), so instances can be
    shared freely across threads.
    """

    delta_ms: float
    traces: Mapping[LinkKey, np.ndarray]
    n_slots: int
    subject: str = ""

    def __post_init__(self):
        if self.delta_ms <= 0:
            raise ConfigurationError(f"delta_ms must be positive, got {self.delta_ms}")
        if self.n_slots < 0:
            raise ConfigurationError("n_slots must be non-negative")
        ordered = {}
        for link in sorted(self.traces, key=link_sort_key):
            arr = np.array(self.traces[link], dtype=np.float64, copy=True)
            if arr.ndim != 1 or arr.shape[0] != self.n_slots:
                raise ConfigurationError(
                    f"trace for {link} has length {arr.shape}, expected ({self.n_slots},)"
                )
            arr.setflags(write=False)
            ordered[link] = arr
        object.__setattr__(self, "traces", MappingProxyType(ordered))

    # -- basic accessors ---------------------------------------------------

    @property
    def links(self) -> tuple[LinkKey, ...]:
        return tuple(self.traces)

    @property
    def n_links(self) -> int:
        return len(self.traces)

    @property
    def duration_ms(self) -> float:
        return self.n_slots * self.delta_ms

    @property
    def duration_s(self) -> float:
        return self.duration_ms / 1000.0

    @property
    def is_dense(self) -> bool:
        return all(not np.isnan(arr).any() for arr in self.traces.values())

    def __contains__(self, link: LinkKey) -> bool:
        return link in self.traces

    def series(self, link: LinkKey) -> np.ndarray:
        try:
            return self.traces[link]
        except KeyError:
            raise MissingLinkError(f"link {link} was not measured") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChannelTraceSet):
            return NotImplemented
        if (
            self.delta_ms != other.delta_ms
            or self.n_slots != other.n_slots
            or self.subject != other.subject
            or self.links != other.links
        ):
            return False
        return all(
            np.array_equal(self.traces[k], other.traces[k], equal_nan=True)
            for k in self.traces
        )


# -- parsing ----------------------------------------------------------------


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, str):
        yield from source.splitlines()
    elif isinstance(source, Path):
        with source.open("r", encoding="utf-8") as fh:
            yield from (line.rstrip("\n").rstrip("\r") for line in fh)
    else:  # file-like
        yield from (line.rstrip("\n").rstrip("\r") for line in source)


def parse_records(source: str | Path | IO[str]) -> list[Record]:
    """Parse record CSV into a time-sorted record list.

    ``source`` may be CSV text, a path, or an open text stream. Comment
    lines start with ``#``. Malformed rows raise :class:`ParseError` with
    the offending line number; receiver-only nodes in the tx column raise
    :class:`SchemaError`.
    """
    records: list[Record] = []
    header_seen = False
    last_line = 0
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        last_line = lineno
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if not header_seen:
            if tuple(fields) != RECORD_HEADER:
                raise ParseError(
                    f"expected header {','.join(RECORD_HEADER)!r}, got {line!r}",
                    line=lineno,
                )
            header_seen = True
            continue
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line=lineno)
        try:
            time_ms = float(fields[0])
        except ValueError:
            raise ParseError(f"bad time_ms value {fields[0]!r}", line=lineno) from None
        if not math.isfinite(time_ms) or time_ms < 0:
            raise ParseError(f"time_ms must be finite and >= 0, got {fields[0]}", line=lineno)
        tx = node_from_label(fields[1], line=lineno)
        rx = node_from_label(fields[2], line=lineno)
        if not tx.is_transceiver:
            raise SchemaError(
                f"node {tx} is receive-only and cannot appear in the tx column",
                line=lineno,
            )
        if tx == rx:
            raise SchemaError(f"self-link {tx}->{rx}", line=lineno)
        try:
            gain_db = float(fields[3])
        except ValueError:
            raise ParseError(f"bad rssi_dbm value {fields[3]!r}", line=lineno) from None
        if not GAIN_MIN_DB <= gain_db <= GAIN_MAX_DB:
            raise ParseError(
                f"gain {gain_db} dB outside [{GAIN_MIN_DB:g}, {GAIN_MAX_DB:g}] dB "
                "(check units: expected channel gain at 0 dBm transmit power)",
                line=lineno,
            )
        records.append(Record(time_ms, tx, rx, gain_db))
    if not header_seen:
        raise ParseError("missing header", line=max(last_line, 1))
    records.sort(key=lambda r: r.time_ms)  # stable: ties keep file order
    return records


# -- grid alignment and imputation -------------------------------------------


def align_to_grid(
    records: Iterable[Record],
    delta_ms: float = DEFAULT_DELTA_MS,
    subject: str = "",
) -> ChannelTraceSet:
    """Drop records onto the uniform grid: slot = floor(time_ms / delta_ms).

    The last record falling in a (link, slot) cell wins; slots no record
    fell into stay NaN. All links share the grid length N, taken from the
    latest record overall, so metrics later share one time base.
    """
    if delta_ms <= 0:
        raise ConfigurationError(f"delta_ms must be positive, got {delta_ms}")
    records = list(records)
    if not records:
        return ChannelTraceSet(delta_ms, {}, 0, subject)
    n_slots = int(max(r.time_ms for r in records) // delta_ms) + 1
    traces: dict[LinkKey, np.ndarray] = {}
    for rec in records:
        arr = traces.get(rec.link)
        if arr is None:
            arr = traces[rec.link] = np.full(n_slots, np.nan)
        arr[int(rec.time_ms // delta_ms)] = rec.gain_db
    return ChannelTraceSet(delta_ms, traces, n_slots, subject)


def impute_missing(
    trace_set: ChannelTraceSet, floor_db: float = DEFAULT_FLOOR_DB
) -> ChannelTraceSet:
    """Replace every missing sample with a constant below receive sensitivity.

    A lost packet is read as an undecodable slot, so the substitute must sit
    below any sensitivity the analysis sweeps over; values at or above
    -100 dB are rejected.
    """
    if not floor_db < -100.0:
        raise ConfigurationError(
            f"imputation floor must be < -100 dB to represent a lost packet, got {floor_db}"
        )
    traces = {
        link: np.where(np.isnan(arr), floor_db, arr)
        for link, arr in trace_set.traces.items()
    }
    return ChannelTraceSet(trace_set.delta_ms, traces, trace_set.n_slots, trace_set.subject)


# -- reciprocity lookups ------------------------------------------------------


def resolve_series(trace_set: ChannelTraceSet, a: Node, b: Node) -> np.ndarray:
    """Gain series between two nodes, preferring the measured a->b direction.

    Falls back to the reverse direction by channel reciprocity; raises
    :class:`MissingLinkError` when neither direction was measured.
    """
    if a is not b:
        if a.is_transceiver and LinkKey(a, b) in trace_set:
            return trace_set.series(LinkKey(a, b))
        if b.is_transceiver and LinkKey(b, a) in trace_set:
            return trace_set.series(LinkKey(b, a))
    raise MissingLinkError(f"no measurement between {a} and {b} in either direction")


def gain_at(trace_set: ChannelTraceSet, a: Node, b: Node, slot: int) -> float:
    """Channel gain between a and b at one slot (see :func:`resolve_series`)."""
    series = resolve_series(trace_set, a, b)
    if not 0 <= slot < trace_set.n_slots:
        raise IndexError(f"slot {slot} outside [0, {trace_set.n_slots})")
    return float(series[slot])


# -- serialization ------------------------------------------------------------


def _fmt_time(t: float) -> str:
    return str(int(t)) if t == int(t) else repr(t)


def _fmt_gain(g: float) -> str:
    # repr round-trips exactly, so re-ingesting reproduces bit-identical values
    return repr(float(g))


def write_record_csv(trace_set: ChannelTraceSet, dest: Path | IO[str]) -> None:
    """Serialize back to record CSV; missing samples emit no row."""
    if isinstance(dest, Path):
        with dest.open("w", encoding="utf-8", newline="\n") as fh:
            write_record_csv(trace_set, fh)
        return
    dest.write(",".join(RECORD_HEADER) + "\n")
    for slot in range(trace_set.n_slots):
        t = _fmt_time(slot * trace_set.delta_ms)
        for link, arr in trace_set.traces.items():
            v = arr[slot]
            if np.isnan(v):
                continue
            dest.write(f"{t},{link.tx.value},{link.rx.value},{_fmt_gain(v)}\n")


def record_csv_text(trace_set: ChannelTraceSet) -> str:
    buf = io.StringIO()
    write_record_csv(trace_set, buf)
    return buf.getvalue()


def load_record_csv(
    source: str | Path | IO[str],
    delta_ms: float = DEFAULT_DELTA_MS,
    subject: str = "",
) -> ChannelTraceSet:
    """Parse and grid-align a record CSV in one step (still unimputed)."""
    return align_to_grid(parse_records(source), delta_ms, subject)


def write_grid_csv(trace_set: ChannelTraceSet, dest: Path | IO[str]) -> None:
    """Dense grid CSV: one row per slot, one column per link, 2 dB decimals."""
    if isinstance(dest, Path):
        with dest.open("w", encoding="utf-8", newline="\n") as fh:
            write_grid_csv(trace_set, fh)
        return
    links = trace_set.links
    columns = "".join("," + link.column for link in links)
    dest.write(f"slot{columns}\n")
    for slot in range(trace_set.n_slots):
        cells = []
        for link in links:
            v = trace_set.traces[link][slot]
            cells.append("," + ("" if np.isnan(v) else f"{v:.2f}"))
        dest.write(f"{slot}{''.join(cells)}\n")


def grid_csv_text(trace_set: ChannelTraceSet) -> str:
    buf = io.StringIO()
    write_grid_csv(trace_set, buf)
    return buf.getvalue()


def read_grid_csv(
    source: str | Path | IO[str],
    delta_ms: float = DEFAULT_DELTA_MS,
    subject: str = "",
) -> ChannelTraceSet:
    """Parse a grid CSV produced by :func:`write_grid_csv`."""
    lines = [ln for ln in _iter_lines(source) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("missing header", line=1)
    header = [f.strip() for f in lines[0].split(",")]
    if not header or header[0] != "slot":
        raise ParseError(f"expected 'slot' as first column, got {header[:1]}", line=1)
    links = [link_from_label(col) for col in header[1:]]
    n_slots = len(lines) - 1
    columns = np.full((n_slots, len(links)), np.nan)
    for i, raw in enumerate(lines[1:], start=2):
        fields = [f.strip() for f in raw.split(",")]
        if len(fields) != len(links) + 1:
            raise ParseError(
                f"expected {len(links) + 1} fields, got {len(fields)}", line=i
            )
        if int(fields[0]) != i - 2:
            raise ParseError(f"slots must be consecutive from 0, got {fields[0]}", line=i)
        for j, cell in enumerate(fields[1:]):
            if cell == "":
                continue
            columns[i - 2, j] = float(cell)
    traces = {link: columns[:, j] for j, link in enumerate(links)}
    return ChannelTraceSet(delta_ms, traces, n_slots, subject)
