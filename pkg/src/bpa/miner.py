"""Discovery of block-structured trees from event logs, with an audit of
which mechanisms produced the result.

The miner is a restricted inductive miner: it recurses over the directly-
follows graph with the choice, sequence and parallel cuts, handles empty
traces by wrapping the remainder in an optional branch, and turns a
single-activity log with repetitions into a self-loop.  There is no
general loop cut.  When no rule applies it falls through to a flower model
over the sublog's alphabet and records which of the classic fall-through
detectors (tau-loop, activity-once-per-trace, activity-concurrent) would
have fired at that point.

:func:`audit_restrictions` inspects the discovery audit and the resulting
tree and reports everything that places the log outside the restricted
class: forbidden fall-throughs, loop nodes that are not plain self-loops,
and sequence nodes with activity or self-loop children.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx

from .logs import EventLog
from .trees import ClassReport, ProcessTree, leaf, node, normal_form, tau, walk

#: Fall-throughs that disqualify a log from the restricted class.  Only
#: "flower" can actually be executed here; the other three are detector
#: names recorded in ``DiscoveryAudit.detected``.
FORBIDDEN_FALLTHROUGHS = (
    "tau-loop",
    "activity-once-per-trace",
    "activity-concurrent",
    "flower",
)


@dataclass
class DiscoveryAudit:
    """Trace of one discovery run.

    cuts_used/fallthroughs_used list what actually executed, in recursion
    order; detected lists fall-through detectors that fired at a flower
    step without being executed; failures lists cut candidates that were
    found but rejected by validation.
    """

    cuts_used: list[str] = field(default_factory=list)
    fallthroughs_used: list[str] = field(default_factory=list)
    detected: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class RestrictionCheck:
    tree: ProcessTree
    audit: DiscoveryAudit
    report: ClassReport

    @property
    def restricted(self) -> bool:
        return self.report.in_class


def discover(log: EventLog, audit: DiscoveryAudit | None = None) -> ProcessTree:
    """Discover a process tree from the control-flow variants of ``log``."""
    if not log:
        raise ValueError("cannot discover a model from an empty log")
    variants = sorted({acts for acts, _ in log.activity_variants()})
    tree = _discover(variants, audit if audit is not None else DiscoveryAudit())
    return normal_form(tree)


def check_restricted(log: EventLog) -> RestrictionCheck:
    audit = DiscoveryAudit()
    tree = discover(log, audit)
    return RestrictionCheck(tree=tree, audit=audit, report=audit_restrictions(tree, audit))


def audit_restrictions(tree: ProcessTree, audit: DiscoveryAudit) -> ClassReport:
    violations: list[tuple[str, str, str]] = []
    for name in audit.fallthroughs_used:
        if name in FORBIDDEN_FALLTHROUGHS:
            violations.append(
                ("forbidden-fallthrough", "", f"discovery used the '{name}' fall-through")
            )
    for path, n in walk(tree):
        if n.label == "loop" and not n.is_self_loop:
            violations.append(
                ("loop-cut", path, "loop node is not a single-activity self-loop")
            )
        if n.label == "seq":
            for i, child in enumerate(n.children):
                if child.is_activity or child.is_self_loop:
                    child_path = f"{path}.{i}" if path else str(i)
                    violations.append(
                        ("model-structure", child_path,
                         "sequence child is an activity or self-loop")
                    )
    return ClassReport.from_violations(violations)


# ---------------------------------------------------------------------------
# Recursion
# ---------------------------------------------------------------------------

def _discover(variants: list[tuple[str, ...]], audit: DiscoveryAudit) -> ProcessTree:
    variants = sorted(set(variants))
    alphabet = sorted({a for v in variants for a in v})

    if not alphabet:
        return tau()
    if any(not v for v in variants):
        audit.fallthroughs_used.append("empty-traces")
        rest = _discover([v for v in variants if v], audit)
        return node("xor", tau(), rest)
    if len(alphabet) == 1 and all(v == (alphabet[0],) for v in variants):
        return leaf(alphabet[0])

    edges, starts, ends = _dfg(variants)

    parts = _choice_cut(alphabet, edges)
    if parts is not None:
        audit.cuts_used.append("choice")
        assigned = {p: [] for p in parts}
        comp_of = {a: p for p in parts for a in p}
        for v in variants:
            assigned[comp_of[v[0]]].append(v)
        return node("xor", *(_discover(assigned[p], audit) for p in parts))

    groups = _sequence_cut(alphabet, edges, audit)
    if groups is not None:
        audit.cuts_used.append("sequence")
        return node("seq", *(_discover(_project(variants, g), audit) for g in groups))

    parts = _parallel_cut(alphabet, edges, starts, ends, audit)
    if parts is not None:
        audit.cuts_used.append("parallel")
        return node("and", *(_discover(_project(variants, p), audit) for p in parts))

    if len(alphabet) == 1:
        audit.fallthroughs_used.append("strict-tau-loop")
        return node("loop", leaf(alphabet[0]), tau())

    audit.fallthroughs_used.append("flower")
    for name in _fired_detectors(variants, alphabet, starts):
        audit.detected.append(name)
    body = node("xor", *(leaf(a) for a in alphabet))
    return node("loop", body, tau())


def _dfg(variants):
    edges: set[tuple[str, str]] = set()
    starts: set[str] = set()
    ends: set[str] = set()
    for v in variants:
        starts.add(v[0])
        ends.add(v[-1])
        edges.update(zip(v, v[1:]))
    return edges, starts, ends


def _project(variants, keep: frozenset[str]) -> list[tuple[str, ...]]:
    return [tuple(a for a in v if a in keep) for v in variants]


def _choice_cut(alphabet, edges) -> list[frozenset[str]] | None:
    g = nx.Graph()
    g.add_nodes_from(alphabet)
    g.add_edges_from((a, b) for a, b in edges if a != b)
    comps = sorted((frozenset(c) for c in nx.connected_components(g)), key=min)
    return comps if len(comps) > 1 else None


def _sequence_cut(alphabet, edges, audit: DiscoveryAudit) -> list[frozenset[str]] | None:
    dg = nx.DiGraph()
    dg.add_nodes_from(alphabet)
    dg.add_edges_from(edges)
    cond = nx.condensation(dg)
    reach = {i: nx.descendants(cond, i) for i in cond.nodes}

    # pairwise mutually unreachable strongly connected components end up in
    # the same group; union-find closes the merge transitively
    uf = nx.utils.UnionFind(cond.nodes)
    for i, j in combinations(cond.nodes, 2):
        if j not in reach[i] and i not in reach[j]:
            uf.union(i, j)
    groups = [frozenset(s) for s in uf.to_sets()]
    if len(groups) < 2:
        return None

    # across two groups every component pair is reachable in exactly one
    # direction; the direction must be uniform, else there is no cut
    forward: dict[tuple[int, int], bool] = {}
    for gi, gj in combinations(range(len(groups)), 2):
        dirs = {j in reach[i] for i in groups[gi] for j in groups[gj]}
        if len(dirs) != 1:
            audit.failures.append("sequence-cut: mixed directions between groups")
            return None
        forward[(gi, gj)] = dirs.pop()

    wins = [0] * len(groups)
    for (gi, gj), fwd in forward.items():
        wins[gi if fwd else gj] += 1
    order = sorted(range(len(groups)), key=lambda i: -wins[i])

    members = cond.graph["mapping"]  # activity -> condensation node
    return [
        frozenset(a for a in alphabet if members[a] in groups[i])
        for i in order
    ]


def _parallel_cut(alphabet, edges, starts, ends, audit: DiscoveryAudit) -> list[frozenset[str]] | None:
    uf = nx.utils.UnionFind(alphabet)
    for a, b in combinations(sorted(alphabet), 2):
        if not ((a, b) in edges and (b, a) in edges):
            uf.union(a, b)
    parts = sorted((frozenset(s) for s in uf.to_sets()), key=min)
    if len(parts) < 2:
        return None
    valid = [p for p in parts if p & starts and p & ends]
    if not valid:
        audit.failures.append("parallel-cut: no part contains both a start and an end activity")
        return None
    if len(valid) < len(parts):
        # parts without a start or end activity cannot stand alone
        merged = set(valid[0])
        for p in parts:
            if p not in valid:
                merged |= p
        parts = sorted(
            [frozenset(merged) if p == valid[0] else p for p in valid], key=min
        )
    if len(parts) < 2:
        audit.failures.append("parallel-cut: merging start/end-less parts left one part")
        return None
    return parts


def _fired_detectors(variants, alphabet, starts) -> list[str]:
    fired = []
    if any(len(v) >= 2 and any(a in starts for a in v[1:]) for v in variants):
        fired.append("tau-loop")
    if any(all(v.count(a) == 1 for v in variants) for a in alphabet):
        fired.append("activity-once-per-trace")
    if any(all(a in v for v in variants) for a in alphabet):
        fired.append("activity-concurrent")
    return fired
