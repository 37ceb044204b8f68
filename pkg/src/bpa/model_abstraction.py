"""Model abstraction by aggregating activities over behavioral profiles.

Given a duplicate-free tree ``M``, an aggregation mapping ``agg`` from
abstract names to sets of concrete activities, and a rational threshold
``w_t``, the abstracted tree is built in three steps:

1. derive the behavioral profile of ``M``;
2. derive an abstract profile over the aggregated alphabet: for each pair
   of abstract activities the four relation weights are computed from the
   fractions of concrete pairs in each relation and the strongest relation
   above ``w_t`` is selected (choice first, then strict order — flipped
   when the inverse weight dominates — then inverse, then parallel);
3. build the order-relations graph of the abstract profile, compute its
   modular decomposition tree, and synthesize one tree node per module
   (linear -> ``seq``, XOR-complete -> ``xor``, AND-complete -> ``and``,
   a leaf in parallel self-relation -> self-loop).  Primitive modules have
   no corresponding operator, so synthesis fails on them.

All weights are exact ``Fraction`` values; threshold comparisons happen at
boundary values like 1/2 and 5/9, where floats would betray us.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Mapping

import networkx as nx

from .profiles import (
    CHOICE,
    INVERSE,
    PARALLEL,
    STRICT,
    BehavioralProfile,
    OrderRelationsGraph,
    behavioral_profile,
    mirror,
    order_relations_graph,
    profile_from_function,
)
from .trees import (
    ClassReport,
    ProcessTree,
    activities,
    check_class,
    normal_form,
    render_tree,
    canonical,
)

logger = logging.getLogger(__name__)

#: Primitive modules larger than this are reported with singleton children
#: (their exact strong-module children are only needed at oracle scale).
_PRIMITIVE_ENUM_LIMIT = 16


class AbstractionError(RuntimeError):
    pass


class InapplicableError(AbstractionError):
    """The aggregation is not applicable to the model; carries the report."""

    def __init__(self, report: ClassReport):
        details = "; ".join(f"{r}: {m}" for r, _, m in report.violations)
        super().__init__(f"aggregation not applicable: {details}")
        self.report = report


class SynthesisError(AbstractionError):
    """The abstract profile has no corresponding process tree."""


# ---------------------------------------------------------------------------
# Aggregation specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggSpec:
    """Aggregation mapping (abstract name -> concrete activities) plus the
    relation-weight threshold ``w_t``.  Carried as given; validity against a
    concrete model is the business of :func:`applicable`."""

    agg: Mapping[str, frozenset[str]]
    w_t: Fraction

    def domain(self) -> set[str]:
        return set(self.agg)

    def covered(self) -> set[str]:
        out: set[str] = set()
        for members in self.agg.values():
            out |= members
        return out

    def new_names(self, alphabet: Iterable[str]) -> set[str]:
        """Abstract names that are not concrete activities."""
        alpha = set(alphabet)
        return {x for x in self.agg if x not in alpha}

    def kept_names(self, alphabet: Iterable[str]) -> set[str]:
        alpha = set(alphabet)
        return {x for x in self.agg if x in alpha}


def make_spec(groups: Mapping[str, Iterable[str]], w_t) -> AggSpec:
    return AggSpec(
        agg={name: frozenset(members) for name, members in groups.items()},
        w_t=Fraction(w_t),
    )


def expand_spec(spec: AggSpec, alphabet: Iterable[str]) -> AggSpec:
    """Complete a partial mapping: every concrete activity that is neither
    listed as an abstract name nor covered by a group maps to itself."""
    agg = {name: frozenset(members) for name, members in spec.agg.items()}
    covered = spec.covered() | set(agg)
    for a in sorted(alphabet):
        if a not in covered:
            agg[a] = frozenset({a})
    return AggSpec(agg=agg, w_t=spec.w_t)


def load_agg_spec(text: str) -> AggSpec:
    """Parse the JSON spec format: ``{"w_t": "p/q", name: [members...]}``."""
    raw = json.loads(text)
    if not isinstance(raw, dict) or "w_t" not in raw:
        raise ValueError("aggregation spec needs a 'w_t' entry")
    w_t = Fraction(str(raw.pop("w_t")))
    groups = {}
    for name, members in raw.items():
        if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
            raise ValueError(f"group {name!r} must be a list of activity names")
        groups[name] = members
    return make_spec(groups, w_t)


def dump_agg_spec(spec: AggSpec) -> str:
    payload: dict = {"w_t": str(spec.w_t)}
    for name in sorted(spec.agg):
        members = sorted(spec.agg[name])
        if members != [name]:  # identity mappings stay implicit
            payload[name] = members
    return json.dumps(payload, indent=2)


# ---------------------------------------------------------------------------
# Relation-weight derivation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelationWeights:
    """The four weak-order weights of an abstract pair and the relation
    weights derived from them (all exact rationals)."""

    x_before_y: Fraction
    y_before_x: Fraction
    x_not_before_y: Fraction
    y_not_before_x: Fraction
    choice: Fraction
    strict: Fraction
    inverse: Fraction
    parallel: Fraction

    @property
    def w_max(self) -> Fraction:
        return max(self.choice, self.strict, self.inverse, self.parallel)


def relation_weights(
    x: str, y: str, profile: BehavioralProfile, spec: AggSpec
) -> RelationWeights:
    gx, gy = spec.agg[x], spec.agg[y]
    if not gx or not gy:
        raise ValueError(f"empty aggregation group for {x!r} or {y!r}")
    unknown = (gx | gy) - profile.activities
    if unknown:
        raise ValueError(f"activities not covered by the profile: {sorted(unknown)}")
    n_xy = n_yx = n_not_xy = n_not_yx = 0
    for v, u in product(sorted(gx), sorted(gy)):
        rel = profile.relation(v, u)
        if rel in (STRICT, PARALLEL):
            n_xy += 1
        if rel in (INVERSE, PARALLEL):
            n_yx += 1
        if rel in (INVERSE, CHOICE):
            n_not_xy += 1
        if rel in (STRICT, CHOICE):
            n_not_yx += 1
    w_prod = len(gx) * len(gy)
    xb = Fraction(n_xy, w_prod)
    yb = Fraction(n_yx, w_prod)
    xnb = Fraction(n_not_xy, w_prod)
    ynb = Fraction(n_not_yx, w_prod)
    return RelationWeights(
        x_before_y=xb,
        y_before_x=yb,
        x_not_before_y=xnb,
        y_not_before_x=ynb,
        choice=min(xnb, ynb),
        strict=min(xb, ynb),
        inverse=min(yb, xnb),
        parallel=min(xb, yb),
    )


def derive_ordering_relation(
    x: str,
    y: str,
    profile: BehavioralProfile,
    spec: AggSpec,
    w_t: Fraction | None = None,
) -> str:
    """Select the relation of an abstract pair by the priority cascade:
    choice, strict order (flipped if the inverse weight dominates),
    inverse, parallel; below-threshold pairs default to parallel with a
    diagnostic (unreachable for thresholds within the applicable range)."""
    w_t = spec.w_t if w_t is None else Fraction(w_t)
    w = relation_weights(x, y, profile, spec)
    if w.choice >= w_t:
        return CHOICE
    if w.strict >= w_t:
        if w.inverse > w.strict:
            return INVERSE
        return STRICT
    if w.inverse >= w_t:
        return INVERSE
    if w.parallel >= w_t:
        return PARALLEL
    logger.warning(
        "no relation weight of (%s, %s) reaches w_t=%s (max %s); defaulting to parallel",
        x, y, w_t, w.w_max,
    )
    return PARALLEL


def w_minmax(profile: BehavioralProfile, spec: AggSpec) -> Fraction:
    """min over abstract pairs (self-pairs included) of the maximum derived
    relation weight — the largest threshold for which every pair still
    reaches some relation."""
    names = sorted(spec.agg)
    if not names:
        raise ValueError("empty aggregation")
    return min(
        relation_weights(x, y, profile, spec).w_max
        for i, x in enumerate(names)
        for y in names[i:]
    )


def derive_profile(profile: BehavioralProfile, spec: AggSpec) -> BehavioralProfile:
    """Abstract profile over the aggregated alphabet.

    Each unordered pair is derived once in lexicographic orientation and
    mirrored, which keeps the result consistent when strict and inverse
    weights tie."""
    if spec.w_t > w_minmax(profile, spec):
        logger.warning(
            "w_t=%s exceeds w_minmax=%s; the default branch may fire",
            spec.w_t, w_minmax(profile, spec),
        )

    def derived(x: str, y: str) -> str:
        return derive_ordering_relation(x, y, profile, spec)

    return profile_from_function(spec.agg.keys(), derived)


# ---------------------------------------------------------------------------
# Modular decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MDTNode:
    """A node of the modular decomposition tree: the vertex set of the
    module, its kind, and the child modules (which partition it)."""

    members: frozenset[str]
    kind: str  # leaf | linear | and-complete | xor-complete | primitive
    children: tuple["MDTNode", ...] = ()

    def iter_nodes(self) -> Iterable["MDTNode"]:
        yield self
        for c in self.children:
            yield from c.iter_nodes()

    def has_primitive(self) -> bool:
        return any(n.kind == "primitive" for n in self.iter_nodes())

    def member_sets(self) -> set[frozenset[str]]:
        return {n.members for n in self.iter_nodes()}


def modular_decomposition(graph: OrderRelationsGraph) -> MDTNode:
    if not graph.vertices:
        raise ValueError("cannot decompose the empty graph")
    edges = set(graph.edges)
    return _decompose(frozenset(graph.vertices), edges)


def _components(vertices: frozenset[str], adjacent) -> list[frozenset[str]]:
    g = nx.Graph()
    g.add_nodes_from(vertices)
    vs = sorted(vertices)
    for i, a in enumerate(vs):
        for b in vs[i + 1:]:
            if adjacent(a, b):
                g.add_edge(a, b)
    return sorted((frozenset(c) for c in nx.connected_components(g)), key=min)


def _decompose(vertices: frozenset[str], edges: set[tuple[str, str]]) -> MDTNode:
    if len(vertices) == 1:
        return MDTNode(vertices, "leaf")

    def has_any(a: str, b: str) -> bool:
        return (a, b) in edges or (b, a) in edges

    def has_both(a: str, b: str) -> bool:
        return (a, b) in edges and (b, a) in edges

    comps = _components(vertices, has_any)
    if len(comps) > 1:
        return MDTNode(vertices, "and-complete", tuple(_decompose(c, edges) for c in comps))

    comps = _components(vertices, lambda a, b: not has_both(a, b))
    if len(comps) > 1:
        return MDTNode(vertices, "xor-complete", tuple(_decompose(c, edges) for c in comps))

    comps = _components(vertices, lambda a, b: has_any(a, b) == has_both(a, b))
    if len(comps) > 1:
        ordered = _linear_order(comps, edges)
        if ordered is not None:
            return MDTNode(vertices, "linear", tuple(_decompose(c, edges) for c in ordered))

    children = _primitive_children(vertices, edges)
    return MDTNode(vertices, "primitive", tuple(_decompose(c, edges) for c in children))


def _linear_order(
    comps: list[frozenset[str]], edges: set[tuple[str, str]]
) -> list[frozenset[str]] | None:
    """Total order on the parts under uniform one-directional edges, or
    None when directions are mixed (the module is then primitive)."""
    k = len(comps)
    wins = [0] * k
    direction: dict[tuple[int, int], int] = {}
    for i in range(k):
        for j in range(i + 1, k):
            fwd = all((a, b) in edges and (b, a) not in edges
                      for a in comps[i] for b in comps[j])
            bwd = all((b, a) in edges and (a, b) not in edges
                      for a in comps[i] for b in comps[j])
            if fwd:
                direction[(i, j)] = 1
                wins[i] += 1
            elif bwd:
                direction[(i, j)] = -1
                wins[j] += 1
            else:
                return None
    order = sorted(range(k), key=lambda i: -wins[i])
    for a in range(k):
        for b in range(a + 1, k):
            i, j = order[a], order[b]
            uniform = direction[(i, j)] == 1 if i < j else direction[(j, i)] == -1
            if not uniform:
                return None
    return [comps[i] for i in order]


def _primitive_children(
    vertices: frozenset[str], edges: set[tuple[str, str]]
) -> list[frozenset[str]]:
    """Maximal proper strong modules of a primitive node.

    Exact (by enumeration) up to ``_PRIMITIVE_ENUM_LIMIT`` vertices; above
    that the node is reported with singleton children, which is all the
    synthesis step needs (it fails on primitive modules regardless)."""
    vs = sorted(vertices)
    if len(vs) > _PRIMITIVE_ENUM_LIMIT:
        return [frozenset({v}) for v in vs]

    def is_module(member_set: frozenset[str]) -> bool:
        probe = next(iter(member_set))
        for z in vs:
            if z in member_set:
                continue
            zin = (z, probe) in edges
            zout = (probe, z) in edges
            for u in member_set:
                if ((z, u) in edges) != zin or ((u, z) in edges) != zout:
                    return False
        return True

    modules: list[frozenset[str]] = []
    n = len(vs)
    for mask in range(3, 1 << n):
        sub = frozenset(vs[i] for i in range(n) if mask >> i & 1)
        if 1 < len(sub) < n and is_module(sub):
            modules.append(sub)

    def strong(s: frozenset[str]) -> bool:
        return all(t <= s or s <= t or not (s & t) for t in modules)

    strong_mods = sorted((s for s in modules if strong(s)), key=len, reverse=True)
    children: list[frozenset[str]] = []
    covered: set[str] = set()
    for s in strong_mods:
        if not (s & covered):
            children.append(s)
            covered |= s
    for v in vs:
        if v not in covered:
            children.append(frozenset({v}))
    return sorted(children, key=min)


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

def synthesize(profile: BehavioralProfile) -> ProcessTree | None:
    """Tree whose behavioral profile equals the given one, or None when a
    primitive module makes the profile unrealizable."""
    graph = order_relations_graph(profile)
    mdt = modular_decomposition(graph)

    def build(m: MDTNode) -> ProcessTree | None:
        if m.kind == "leaf":
            (x,) = m.members
            if profile.relation(x, x) == PARALLEL:
                return ProcessTree("loop", (ProcessTree(x), ProcessTree("tau")))
            return ProcessTree(x)
        if m.kind == "primitive":
            return None
        kids = []
        for c in m.children:
            sub = build(c)
            if sub is None:
                return None
            kids.append(sub)
        if m.kind == "linear":
            return ProcessTree("seq", tuple(kids))
        op = "xor" if m.kind == "xor-complete" else "and"
        kids.sort(key=lambda t: render_tree(canonical(t)))
        return ProcessTree(op, tuple(kids))

    tree = build(mdt)
    return None if tree is None else normal_form(tree)


# ---------------------------------------------------------------------------
# Applicability and the full abstraction
# ---------------------------------------------------------------------------

def applicable(model: ProcessTree, spec: AggSpec) -> ClassReport:
    """Check the five applicability conditions; violations are reported,
    not thrown."""
    violations: list[tuple[str, str, str]] = []

    class_report = check_class(model, "C_c")
    for rule, path, msg in class_report.violations:
        if rule == "duplicate-activity":
            violations.append((rule, path, msg))
        else:
            violations.append(("model-class", path, msg))

    alphabet = activities(model)
    full = expand_spec(spec, alphabet)
    unknown = full.covered() - alphabet
    if unknown:
        violations.append(
            ("agg-unknown-activity", "", f"group members not in the model: {sorted(unknown)}")
        )

    new = full.new_names(alphabet)
    kept = full.kept_names(alphabet)
    if not new:
        violations.append(("no-new-activity", "", "aggregation introduces no abstract activity"))
    for x in sorted(new):
        if len(full.agg[x]) < 2:
            violations.append(
                ("singleton-group", "", f"abstract activity '{x}' aggregates fewer than 2 activities")
            )
    union_new = set().union(*(full.agg[x] for x in new)) if new else set()
    if new and len(union_new) <= len(new) + 1:
        violations.append(
            ("aggregation-union", "",
             f"aggregated activities ({len(union_new)}) must outnumber abstract activities + 1 "
             f"({len(new) + 1})")
        )
    for y in sorted(kept):
        if full.agg[y] != frozenset({y}):
            violations.append(
                ("kept-not-identity", "", f"kept activity '{y}' must map to itself")
            )

    if not (0 < spec.w_t <= 1):
        violations.append(("threshold", "", f"w_t={spec.w_t} outside (0, 1]"))

    if violations:
        return ClassReport.from_violations(violations)

    concrete_profile = behavioral_profile(model)
    limit = w_minmax(concrete_profile, full)
    if spec.w_t > limit:
        violations.append(
            ("threshold", "", f"w_t={spec.w_t} exceeds w_minmax={limit}")
        )
        return ClassReport.from_violations(violations)

    abstract = derive_profile(concrete_profile, full)
    mdt = modular_decomposition(order_relations_graph(abstract))
    for n in mdt.iter_nodes():
        if n.kind == "primitive":
            violations.append(
                ("primitive-module", "", f"primitive module over {sorted(n.members)}")
            )
    return ClassReport.from_violations(violations)


def abstract_profile(model: ProcessTree, spec: AggSpec) -> BehavioralProfile:
    """Derived profile over the full (expanded) abstract alphabet."""
    full = expand_spec(spec, activities(model))
    return derive_profile(behavioral_profile(model), full)


def ma_bpa(model: ProcessTree, spec: AggSpec) -> ProcessTree:
    """The full model abstraction; raises when inapplicable or when
    synthesis fails."""
    report = applicable(model, spec)
    if not report.in_class:
        raise InapplicableError(report)
    tree = synthesize(abstract_profile(model, spec))
    if tree is None:
        raise SynthesisError("abstract profile contains a primitive module")
    return tree
