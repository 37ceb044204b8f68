"""Event logs as multisets of traces, plus directly-follows graphs and IO.

Traces are tuples of :class:`Event`.  A log stores trace *variants* with
multiplicities; by default two traces are the same variant when their
activity sequences agree (control-flow identity), attribute columns are
carried along but do not participate in identity unless requested.

Supported file formats
----------------------
CSV
    Header ``case,activity[,timestamp][,attr:*]``.  Rows are grouped by
    case id; events are ordered by timestamp when the column is present,
    otherwise by file order.  On output the attribute columns ``concrete``
    and ``transposed`` (produced by log abstraction) are written as plain
    columns.

Compact traces
    One trace per line: ``[xN ]act1,act2,...`` with an optional
    multiplicity prefix.  A line ``xN `` with nothing after the space
    denotes an empty trace; blank lines are ignored.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

START = "▷"  # artificial start node of the DFG
END = "◁"    # artificial end node of the DFG


@dataclass(frozen=True)
class Event:
    """A single event: an activity name plus optional string attributes."""

    activity: str
    attrs: tuple[tuple[str, str], ...] = ()

    def get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.attrs:
            if k == key:
                return v
        return default

    def with_attrs(self, **kv: str) -> "Event":
        merged = dict(self.attrs)
        merged.update(kv)
        return Event(self.activity, tuple(sorted(merged.items())))


Trace = tuple[Event, ...]


def as_trace(items: Sequence[str | Event]) -> Trace:
    """Build a trace from activity names and/or events."""
    return tuple(e if isinstance(e, Event) else Event(e) for e in items)


def trace_activities(trace: Trace) -> tuple[str, ...]:
    return tuple(e.activity for e in trace)


class EventLog:
    """Multiset of traces with insertion-ordered variants."""

    __slots__ = ("_variants", "attrs_identity")

    def __init__(self, traces: Iterable[Sequence[str | Event]] = (), attrs_identity: bool = False):
        self._variants: dict[object, list] = {}
        self.attrs_identity = attrs_identity
        for t in traces:
            self.add(t)

    def _key(self, trace: Trace) -> object:
        if self.attrs_identity:
            return trace
        return trace_activities(trace)

    def add(self, trace: Sequence[str | Event], count: int = 1) -> None:
        if count < 1:
            raise ValueError("multiplicity must be >= 1")
        t = as_trace(trace)
        key = self._key(t)
        slot = self._variants.get(key)
        if slot is None:
            self._variants[key] = [t, count]
        else:
            slot[1] += count

    # -- views -------------------------------------------------------------
    def variants(self) -> list[tuple[Trace, int]]:
        """Distinct traces with multiplicities, in first-appearance order."""
        return [(t, c) for t, c in self._variants.values()]

    def activity_variants(self) -> list[tuple[tuple[str, ...], int]]:
        out: dict[tuple[str, ...], int] = {}
        for t, c in self._variants.values():
            key = trace_activities(t)
            out[key] = out.get(key, 0) + c
        return list(out.items())

    def traces(self) -> Iterator[Trace]:
        """All traces, multiplicities expanded."""
        for t, c in self._variants.values():
            for _ in range(c):
                yield t

    def as_multiset(self) -> dict[tuple[str, ...], int]:
        return dict(self.activity_variants())

    @property
    def num_traces(self) -> int:
        return sum(c for _, c in self._variants.values())

    @property
    def num_events(self) -> int:
        return sum(c * len(t) for t, c in self._variants.values())

    def __len__(self) -> int:
        return self.num_traces

    def __bool__(self) -> bool:
        return bool(self._variants)

    def __eq__(self, other: object) -> bool:
        """Multiset equality on activity sequences (control flow only)."""
        if not isinstance(other, EventLog):
            return NotImplemented
        return self.as_multiset() == other.as_multiset()

    def __hash__(self) -> int:  # pragma: no cover - logs are not dict keys
        return hash(frozenset(self.as_multiset().items()))

    def __repr__(self) -> str:
        return f"EventLog({self.num_traces} traces, {self.num_events} events)"

    def activities(self) -> set[str]:
        out: set[str] = set()
        for t, _ in self._variants.values():
            out.update(trace_activities(t))
        return out

    def union(self, other: "EventLog") -> "EventLog":
        """Multiset union (additive)."""
        out = EventLog(attrs_identity=self.attrs_identity)
        for t, c in self.variants():
            out.add(t, c)
        for t, c in other.variants():
            out.add(t, c)
        return out

    __add__ = union


def log_from_sequences(seqs: Iterable[Sequence[str]], counts: Iterable[int] | None = None) -> EventLog:
    """Shorthand constructor from activity-name sequences."""
    log = EventLog()
    if counts is None:
        for s in seqs:
            log.add(s)
    else:
        for s, c in zip(seqs, counts):
            log.add(s, c)
    return log


def log_metrics(log: EventLog) -> tuple[int, int]:
    """``(number of traces, total number of events)``."""
    return log.num_traces, log.num_events


# ---------------------------------------------------------------------------
# Directly-follows graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DFG:
    """Directly-follows graph over activities plus the START/END nodes."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def successors(self, node: str) -> set[str]:
        return {y for x, y in self.edges if x == node}

    def predecessors(self, node: str) -> set[str]:
        return {x for x, y in self.edges if y == node}


def dfg_of_log(log: EventLog) -> DFG:
    """Edge (x,y) iff y directly follows x in some trace; empty traces map
    to the single edge (START, END)."""
    nodes = {START, END} | log.activities()
    edges: set[tuple[str, str]] = set()
    for acts, _ in log.activity_variants():
        if not acts:
            edges.add((START, END))
            continue
        edges.add((START, acts[0]))
        for a, b in zip(acts, acts[1:]):
            edges.add((a, b))
        edges.add((acts[-1], END))
    return DFG(frozenset(nodes), frozenset(edges))


def dfg_to_dot(g: DFG, name: str = "dfg") -> str:
    ids = {n: f"n{i}" for i, n in enumerate(sorted(g.nodes))}
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for n, nid in ids.items():
        shape = "doublecircle" if n in (START, END) else "box"
        lines.append(f'  {nid} [label="{n}", shape={shape}];')
    for x, y in sorted(g.edges):
        lines.append(f"  {ids[x]} -> {ids[y]};")
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CSV ingestion / output
# ---------------------------------------------------------------------------

def read_csv_log(source, attrs_identity: bool = False) -> EventLog:
    """Read a log from a CSV path or file object.

    Required columns ``case`` and ``activity``; optional ``timestamp``
    (sorting key within a case, stable w.r.t. file order); every column
    named ``attr:NAME`` becomes an event attribute ``NAME``.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            return read_csv_log(fh, attrs_identity)
    reader = csv.DictReader(source)
    if reader.fieldnames is None or "case" not in reader.fieldnames or "activity" not in reader.fieldnames:
        raise ValueError("CSV log needs 'case' and 'activity' columns")
    has_ts = "timestamp" in reader.fieldnames
    attr_cols = [c for c in reader.fieldnames if c.startswith("attr:")]
    special_cols = [c for c in ("concrete", "transposed") if c in reader.fieldnames]
    cases: dict[str, list] = {}
    for i, row in enumerate(reader):
        named = [(c[5:], row[c]) for c in attr_cols if row.get(c)]
        named += [(c, row[c]) for c in special_cols if row.get(c)]
        ev = Event(row["activity"], tuple(sorted(named)))
        ts = row.get("timestamp", "") if has_ts else ""
        cases.setdefault(row["case"], []).append((ts, i, ev))
    log = EventLog(attrs_identity=attrs_identity)
    for case in cases:
        rows = cases[case]
        if has_ts:
            rows.sort(key=lambda r: (_timestamp_key(r[0]), r[1]))
        log.add([ev for _, _, ev in rows])
    return log


def _timestamp_key(ts: str):
    try:
        return (0, float(ts))
    except ValueError:
        return (1, ts)


def write_csv_log(log: EventLog, target) -> None:
    """Write a log as CSV; abstraction attributes ``concrete`` and
    ``transposed`` get their own columns, all others go to ``attr:*``."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            write_csv_log(log, fh)
            return
    special = ("concrete", "transposed")
    attr_names = sorted(
        {k for t, _ in log.variants() for e in t for k, _ in e.attrs if k not in special}
    )
    fields = ["case", "activity", *special, *(f"attr:{a}" for a in attr_names)]
    writer = csv.DictWriter(target, fieldnames=fields)
    writer.writeheader()
    case_no = 0
    for trace, count in log.variants():
        for _ in range(count):
            case_no += 1
            for ev in trace:
                row = {"case": f"c{case_no}", "activity": ev.activity}
                for s in special:
                    row[s] = ev.get(s, "")
                for a in attr_names:
                    row[f"attr:{a}"] = ev.get(a, "")
                writer.writerow(row)


# ---------------------------------------------------------------------------
# Compact trace format
# ---------------------------------------------------------------------------

_MULT_RE = re.compile(r"^x(\d+) (.*)$")


def read_compact(text: str) -> EventLog:
    """Parse the compact one-trace-per-line format from a string."""
    log = EventLog()
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if not line.strip() and not _MULT_RE.match(line):
            continue
        m = _MULT_RE.match(line)
        if m:
            count, rest = int(m.group(1)), m.group(2)
        else:
            count, rest = 1, line
        acts = [a.strip() for a in rest.split(",") if a.strip()]
        log.add(acts, count)
    return log


def read_compact_file(path) -> EventLog:
    with open(path) as fh:
        return read_compact(fh.read())


def format_compact(log: EventLog) -> str:
    lines = []
    for acts, count in log.activity_variants():
        body = ",".join(acts)
        lines.append(f"x{count} {body}" if count > 1 or not body else body)
    return "\n".join(lines) + "\n"
