"""Block-structured process trees.

A process tree is either an activity leaf, the silent leaf ``tau``, or an
operator node over at least two children:

* ``seq`` — sequential composition (ordered),
* ``xor`` — exclusive choice,
* ``and`` — interleaved parallel composition,
* ``loop`` — repetition (first child is the body).

Trees are immutable and hashable.  The text grammar is::

    tree := 'tau' | IDENT | OP '(' tree (',' tree)+ ')'
    OP   := 'seq' | 'xor' | 'and' | 'loop'

with ``IDENT = [A-Za-z0-9_]+`` excluding the keywords.  Two trees are
*isomorphic* when they are equal up to reordering the children of ``xor``/
``and`` nodes and the non-first children of ``loop`` nodes.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator

OPERATORS = ("seq", "xor", "and", "loop")
TAU = "tau"
KEYWORDS = frozenset(OPERATORS) | {TAU}

#: Pretty symbols used for DOT export.
OPERATOR_SYMBOLS = {"seq": "→", "xor": "×", "and": "∧", "loop": "↺"}
TAU_SYMBOL = "τ"

_IDENT_RE = re.compile(r"[A-Za-z0-9_]+")


class TreeSyntaxError(ValueError):
    """Raised by :func:`parse_tree` with a character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class ProcessTree:
    """One node of a process tree.

    ``label`` is an operator name, an activity name, or ``"tau"``.  Operator
    nodes carry at least two children; leaves carry none.
    """

    label: str
    children: tuple["ProcessTree", ...] = ()

    def __post_init__(self) -> None:
        if self.label in OPERATORS:
            if len(self.children) < 2:
                raise ValueError(f"operator '{self.label}' needs >= 2 children")
        else:
            if self.children:
                raise ValueError(f"leaf '{self.label}' cannot have children")
            if self.label != TAU and not _IDENT_RE.fullmatch(self.label):
                raise ValueError(f"invalid activity name: {self.label!r}")

    # -- structural predicates -------------------------------------------
    @property
    def is_operator(self) -> bool:
        return self.label in OPERATORS

    @property
    def is_tau(self) -> bool:
        return self.label == TAU

    @property
    def is_activity(self) -> bool:
        return not self.is_operator and not self.is_tau

    @property
    def is_self_loop(self) -> bool:
        """True for ``loop(v, tau)`` with ``v`` an activity leaf."""
        return (
            self.label == "loop"
            and len(self.children) == 2
            and self.children[0].is_activity
            and self.children[1].is_tau
        )

    def __repr__(self) -> str:  # compact, mirrors the text grammar
        return f"ProcessTree({render_tree(self)!r})"


@dataclass(frozen=True)
class ClassReport:
    """Outcome of a rule check: ``in_class`` iff ``violations`` is empty.

    Each violation is a ``(rule-id, path, message)`` triple where ``path``
    is the dotted child-index path from the root (empty string = root).
    """

    in_class: bool
    violations: tuple[tuple[str, str, str], ...] = ()

    @classmethod
    def from_violations(cls, violations) -> "ClassReport":
        vs = tuple(violations)
        return cls(in_class=not vs, violations=vs)


def leaf(name: str) -> ProcessTree:
    return ProcessTree(name)


def tau() -> ProcessTree:
    return ProcessTree(TAU)


def node(op: str, *children: ProcessTree) -> ProcessTree:
    return ProcessTree(op, tuple(children))


# ---------------------------------------------------------------------------
# Parsing / rendering
# ---------------------------------------------------------------------------

def parse_tree(text: str) -> ProcessTree:
    """Parse the tree text grammar; raises :class:`TreeSyntaxError`."""
    pos = 0
    n = len(text)

    def skip_ws(p: int) -> int:
        while p < n and text[p].isspace():
            p += 1
        return p

    def parse_node(p: int) -> tuple[ProcessTree, int]:
        p = skip_ws(p)
        m = _IDENT_RE.match(text, p)
        if not m:
            raise TreeSyntaxError("expected identifier", p)
        word = m.group()
        p = m.end()
        if word in OPERATORS:
            p = skip_ws(p)
            if p >= n or text[p] != "(":
                raise TreeSyntaxError(f"operator '{word}' requires '('", p)
            children = []
            p += 1
            while True:
                child, p = parse_node(p)
                children.append(child)
                p = skip_ws(p)
                if p < n and text[p] == ",":
                    p += 1
                    continue
                if p < n and text[p] == ")":
                    p += 1
                    break
                raise TreeSyntaxError("expected ',' or ')'", p)
            if len(children) < 2:
                raise TreeSyntaxError(f"operator '{word}' needs >= 2 children", p)
            return ProcessTree(word, tuple(children)), p
        if word == TAU:
            return ProcessTree(TAU), p
        return ProcessTree(word), p

    tree, pos = parse_node(pos)
    pos = skip_ws(pos)
    if pos != n:
        raise TreeSyntaxError("trailing input after tree", pos)
    return tree


def render_tree(tree: ProcessTree) -> str:
    """Inverse of :func:`parse_tree` (compact, no whitespace)."""
    if not tree.is_operator:
        return tree.label
    return f"{tree.label}({','.join(render_tree(c) for c in tree.children)})"


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def size(tree: ProcessTree) -> int:
    """Number of nodes: operator nodes plus leaves (tau counts)."""
    return 1 + sum(size(c) for c in tree.children)


def activities(tree: ProcessTree) -> set[str]:
    """All non-tau leaf labels."""
    if tree.is_activity:
        return {tree.label}
    out: set[str] = set()
    for c in tree.children:
        out |= activities(c)
    return out


def walk(tree: ProcessTree, path: str = "") -> Iterator[tuple[str, ProcessTree]]:
    """Depth-first (pre-order) iteration as ``(dotted-index-path, node)``."""
    yield path, tree
    for i, c in enumerate(tree.children):
        yield from walk(c, f"{path}.{i}".lstrip("."))


def activity_leaves(tree: ProcessTree) -> list[tuple[str, str]]:
    """``(path, activity)`` for every activity leaf, in document order."""
    return [(p, t.label) for p, t in walk(tree) if t.is_activity]


# ---------------------------------------------------------------------------
# Class checks
# ---------------------------------------------------------------------------

def check_class(tree: ProcessTree, which: str = "C_c") -> ClassReport:
    """Check tree-shape restrictions.

    ``C_c``: no duplicate activities (rule ``duplicate-activity``) and every
    loop node is exactly ``loop(v, tau)`` (rule ``loop-shape``).  ``C_a``
    additionally forbids tau leaves outside self-loop nodes (rule
    ``tau-outside-self-loop``).
    """
    if which not in ("C_c", "C_a"):
        raise ValueError(f"unknown tree class: {which!r}")
    violations: list[tuple[str, str, str]] = []

    seen: dict[str, str] = {}
    for path, name in activity_leaves(tree):
        if name in seen:
            violations.append(
                ("duplicate-activity", path, f"activity '{name}' already used at '{seen[name]}'")
            )
        else:
            seen[name] = path

    for path, t in walk(tree):
        if t.label == "loop" and not t.is_self_loop:
            violations.append(("loop-shape", path, "loop node is not of the form loop(v,tau)"))

    if which == "C_a":
        def scan(t: ProcessTree, path: str) -> None:
            if t.is_self_loop:
                return  # the only sanctioned tau
            if t.is_tau:
                violations.append(("tau-outside-self-loop", path, "tau leaf outside a self-loop"))
                return
            for i, c in enumerate(t.children):
                scan(c, f"{path}.{i}".lstrip("."))

        scan(tree, "")

    return ClassReport.from_violations(violations)


class ClassViolationError(ValueError):
    """A tree failed a required class check."""

    def __init__(self, report: ClassReport, which: str):
        details = "; ".join(f"{r}@{p or 'root'}: {m}" for r, p, m in report.violations)
        super().__init__(f"process tree is not in {which}: {details}")
        self.report = report


def require_class(tree: ProcessTree, which: str = "C_c") -> None:
    report = check_class(tree, which)
    if not report.in_class:
        raise ClassViolationError(report, which)


# ---------------------------------------------------------------------------
# Normal form, canonical form, isomorphism
# ---------------------------------------------------------------------------

def normal_form(tree: ProcessTree) -> ProcessTree:
    """Language-preserving reduction.

    Flattens nested ``seq``/``xor``/``and`` nodes of the same operator, drops
    duplicate (isomorphic) ``xor`` branches, and collapses single-child
    nodes.  Idempotent and activity-preserving.
    """
    if not tree.is_operator:
        return tree
    kids = [normal_form(c) for c in tree.children]
    if tree.label == "loop":
        return ProcessTree("loop", tuple(kids))
    flat: list[ProcessTree] = []
    for c in kids:
        if c.label == tree.label:
            flat.extend(c.children)
        else:
            flat.append(c)
    if tree.label == "xor":
        seen: set[str] = set()
        unique = []
        for c in flat:
            key = render_tree(canonical(c))
            if key not in seen:
                seen.add(key)
                unique.append(c)
        flat = unique
    if len(flat) == 1:
        return flat[0]
    return ProcessTree(tree.label, tuple(flat))


def canonical(tree: ProcessTree) -> ProcessTree:
    """Canonical representative of the isomorphism class.

    Children of commutative nodes (``xor``, ``and``) and the non-first
    children of ``loop`` nodes are sorted lexicographically by their
    canonical rendering.
    """
    if not tree.is_operator:
        return tree
    kids = [canonical(c) for c in tree.children]
    if tree.label in ("xor", "and"):
        kids.sort(key=render_tree)
    elif tree.label == "loop":
        kids = [kids[0]] + sorted(kids[1:], key=render_tree)
    return ProcessTree(tree.label, tuple(kids))


def isomorphic(a: ProcessTree, b: ProcessTree) -> bool:
    return canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------

def tree_to_dot(tree: ProcessTree, name: str = "process_tree") -> str:
    """Graphviz digraph with one node per tree node."""
    lines = [f"digraph {name} {{", "  node [shape=circle];"]
    counter = 0

    def emit(t: ProcessTree) -> str:
        nonlocal counter
        me = f"n{counter}"
        counter += 1
        if t.is_operator:
            label = OPERATOR_SYMBOLS[t.label]
            shape = "circle"
        elif t.is_tau:
            label, shape = TAU_SYMBOL, "circle"
        else:
            label, shape = t.label, "box"
        lines.append(f'  {me} [label="{label}", shape={shape}];')
        for c in t.children:
            child = emit(c)
            lines.append(f"  {me} -> {child};")
        return me

    emit(tree)
    lines.append("}")
    return "\n".join(lines)


def map_activities(tree: ProcessTree, fn: Callable[[str], str]) -> ProcessTree:
    """Rename activity leaves through ``fn`` (structure unchanged)."""
    if tree.is_activity:
        return ProcessTree(fn(tree.label))
    if not tree.is_operator:
        return tree
    return ProcessTree(tree.label, tuple(map_activities(c, fn) for c in tree.children))
