"""Minimal df-complete logs and trace counting.

The *minimal df-complete log* ``L_m(M)`` of a tree ``M`` is the smallest
multiset of traces whose directly-follows graph equals the model's.  It is
built recursively: an activity leaf contributes ``[<v>]``, tau ``[<>]``, a
self-loop ``[<v,v>]`` (one repetition suffices to witness the loop edge),
``xor`` takes the multiset union of its children's logs, ``seq`` all ordered
concatenations, and ``and`` every order-preserving interleaving of one trace
per child.

``ntl`` computes the number of traces and the per-trace lengths of
``L_m(M)`` without materializing it:

* leaf -> (1, <1>); tau -> (1, <0>); self-loop -> (1, <2>)
* xor  -> sum of counts, concatenated lengths (child order)
* seq  -> product of counts; one summed length per combination of child
  traces, combinations enumerated lexicographically
* and  -> per combination, ``m!/(l_1! * ... * l_n!)`` interleavings, each of
  length ``m = l_1 + ... + l_n``

Counts use arbitrary-precision integers; log construction is guarded by a
trace cap because interleaving counts grow multinomially.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator

from .logs import DFG, EventLog, dfg_of_log
from .trees import ProcessTree, require_class

DEFAULT_TRACE_CAP = 100_000


class LogSizeError(RuntimeError):
    """Minimal-log construction would exceed the configured trace cap."""


@dataclass(frozen=True)
class NtlResult:
    """Trace count and per-trace lengths of the minimal df-complete log."""

    tr: int
    lens: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.tr != len(self.lens):
            raise ValueError("tr must equal len(lens)")

    @property
    def size(self) -> int:
        """Total number of events, i.e. the sum of all trace lengths."""
        return sum(self.lens)


def ntl(tree: ProcessTree, trace_cap: int | None = None) -> NtlResult:
    """Trace count and lengths of ``L_m(M)``.  With ``trace_cap`` the
    computation aborts with :class:`LogSizeError` as soon as any subtree
    exceeds the cap (a child's count is a lower bound for its parent's)."""
    require_class(tree, "C_c")
    tr, lens = _ntl(tree, trace_cap)
    return NtlResult(tr, tuple(lens))


def _multinomial(parts: tuple[int, ...]) -> int:
    m = sum(parts)
    out = math.factorial(m)
    for p in parts:
        out //= math.factorial(p)
    return out


def _ntl(t: ProcessTree, cap: int | None) -> tuple[int, list[int]]:
    if t.is_tau:
        return 1, [0]
    if t.is_activity:
        return 1, [1]
    if t.is_self_loop:
        return 1, [2]
    subs = [_ntl(c, cap) for c in t.children]
    combos = math.prod(n for n, _ in subs)
    if t.label == "xor":
        lens = [l for _, ls in subs for l in ls]
        _check_cap(len(lens), cap)
        return len(lens), lens
    if t.label == "seq":
        _check_cap(combos, cap)
        lens = [sum(pick) for pick in product(*(ls for _, ls in subs))]
        return len(lens), lens
    if t.label == "and":
        _check_cap(combos, cap)  # every combination yields at least one trace
        tr = 0
        lens: list[int] = []
        for pick in product(*(ls for _, ls in subs)):
            count = _multinomial(pick)
            tr += count
            _check_cap(tr, cap)
            lens.extend([sum(pick)] * count)
        return tr, lens
    raise AssertionError(f"unreachable operator {t.label!r}")  # loop-shape checked upfront


def _check_cap(count: int, cap: int | None) -> None:
    if cap is not None and count > cap:
        raise LogSizeError(f"minimal log has at least {count} traces, exceeding {cap}")


# ---------------------------------------------------------------------------
# Minimal-log construction
# ---------------------------------------------------------------------------

def minimal_log(tree: ProcessTree, trace_cap: int = DEFAULT_TRACE_CAP) -> EventLog:
    """Materialize ``L_m(M)``, traces in deterministic generation order."""
    ntl(tree, trace_cap=trace_cap)  # also performs the class check
    log = EventLog()
    for trace in _min_traces(tree):
        log.add(trace)
    return log


def _min_traces(t: ProcessTree) -> list[tuple[str, ...]]:
    if t.is_tau:
        return [()]
    if t.is_activity:
        return [(t.label,)]
    if t.is_self_loop:
        v = t.children[0].label
        return [(v, v)]
    subs = [_min_traces(c) for c in t.children]
    if t.label == "xor":
        return [trace for sub in subs for trace in sub]
    if t.label == "seq":
        out = []
        for pick in product(*subs):
            out.append(tuple(x for part in pick for x in part))
        return out
    # and: all interleavings per combination, lexicographic in the sequence
    # of child picks; distinct traces only.
    out = []
    for pick in product(*subs):
        out.extend(dict.fromkeys(_interleavings(pick)))
    return out


def _interleavings(seqs: tuple[tuple[str, ...], ...]) -> Iterator[tuple[str, ...]]:
    """Order-preserving shuffles, in lexicographic child-pick order."""
    n = len(seqs)
    total = sum(len(s) for s in seqs)

    def rec(positions: tuple[int, ...], acc: list[str]) -> Iterator[tuple[str, ...]]:
        if len(acc) == total:
            yield tuple(acc)
            return
        for i in range(n):
            if positions[i] < len(seqs[i]):
                acc.append(seqs[i][positions[i]])
                bumped = positions[:i] + (positions[i] + 1,) + positions[i + 1:]
                yield from rec(bumped, acc)
                acc.pop()

    return rec((0,) * n, [])


# ---------------------------------------------------------------------------
# Bounded language enumeration (oracle)
# ---------------------------------------------------------------------------

def enumerate_language(tree: ProcessTree, loop_bound: int = 1) -> set[tuple[str, ...]]:
    """All traces of ``M`` with every loop unrolled ``1..loop_bound+1``
    times.  Intended as a small-scale oracle, not a production path."""
    if tree.is_tau:
        return {()}
    if tree.is_activity:
        return {(tree.label,)}
    subs = [enumerate_language(c, loop_bound) for c in tree.children]
    if tree.label == "xor":
        return set().union(*subs)
    if tree.label == "seq":
        out = {()}
        for sub in subs:
            out = {a + b for a in out for b in sub}
        return out
    if tree.label == "and":
        out = {()}
        for sub in subs:
            out = {m for a in out for b in sub for m in _interleavings((a, b))}
        return out
    # loop(body, redo_1..redo_k): body (redo body)^0..loop_bound
    body, redos = subs[0], set().union(*subs[1:])
    out = set(body)
    frontier = set(body)
    for _ in range(loop_bound):
        frontier = {f + r + b for f in frontier for r in redos for b in body}
        out |= frontier
    return out


# ---------------------------------------------------------------------------
# df-completeness
# ---------------------------------------------------------------------------

def dfg_of_model(tree: ProcessTree, trace_cap: int = DEFAULT_TRACE_CAP) -> DFG:
    """``G(M)``, computed from the minimal df-complete log."""
    return dfg_of_log(minimal_log(tree, trace_cap))


def df_complete(log: EventLog, tree: ProcessTree, trace_cap: int = DEFAULT_TRACE_CAP) -> bool:
    """True iff ``G(L)`` and ``G(M)`` are equal (nodes and edges)."""
    return dfg_of_log(log) == dfg_of_model(tree, trace_cap)
