"""End-to-end round trip and randomized verification.

``roundtrip`` runs the full chain on one log: discover a model, check the
restriction audit (informational — the chain continues either way), check
applicability of the aggregation (a hard gate), abstract the model,
abstract the log in sync, rediscover from the abstracted log, and compare
the rediscovered tree with the abstracted model up to isomorphism.

``verify`` repeats this over randomly generated instances and additionally
checks two invariants per instance: the abstracted model realizes exactly
the derived abstract profile, and the predicted trace count and lengths of
its minimal log match the actual minimal log.  Failing instances are
shrunk to smaller counterexamples before reporting.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from collections import Counter
from fractions import Fraction

from .event_abstraction import MatchingError, context_for, ea1, ea2
from .logs import EventLog
from .miner import check_restricted, discover
from .model_abstraction import (
    AggSpec,
    applicable,
    derive_profile,
    dump_agg_spec,
    expand_spec,
    w_minmax,
)
from .profiles import CHOICE, behavioral_profile
from .semantics import LogSizeError, minimal_log, ntl
from .trees import (
    ClassReport,
    ProcessTree,
    activities,
    isomorphic,
    leaf,
    node,
    normal_form,
    render_tree,
    tau,
)


@dataclass(frozen=True)
class RoundtripReport:
    """Everything a round trip produced; later stages are None when an
    earlier gate stopped the chain."""

    model: ProcessTree
    restricted: bool
    restriction_report: ClassReport
    applicability: ClassReport
    abstract_model: ProcessTree | None = None
    abstract_log: EventLog | None = None
    rediscovered: ProcessTree | None = None
    isomorphic: bool | None = None
    failures: tuple[str, ...] = ()


def roundtrip(log: EventLog, spec: AggSpec) -> RoundtripReport:
    check = check_restricted(log)
    model = check.tree
    app = applicable(model, spec)
    if not app.in_class:
        return RoundtripReport(
            model=model,
            restricted=check.restricted,
            restriction_report=check.report,
            applicability=app,
            failures=("aggregation not applicable to the discovered model",),
        )

    failures: list[str] = []
    ctx = context_for(model, spec)
    abstracted_model = ctx.model
    stage_one = ea1(log, ctx)
    try:
        abstracted_log = ea2(stage_one, abstracted_model)
    except MatchingError as exc:
        return RoundtripReport(
            model=model,
            restricted=check.restricted,
            restriction_report=check.report,
            applicability=app,
            abstract_model=abstracted_model,
            failures=(f"trace matching failed: {exc}",),
        )

    rediscovered = discover(abstracted_log)
    iso = isomorphic(rediscovered, abstracted_model)
    if not iso:
        failures.append("rediscovered model is not isomorphic to the abstracted model")
    return RoundtripReport(
        model=model,
        restricted=check.restricted,
        restriction_report=check.report,
        applicability=app,
        abstract_model=abstracted_model,
        abstract_log=abstracted_log,
        rediscovered=rediscovered,
        isomorphic=iso,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Instance generation
# ---------------------------------------------------------------------------

class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenParams:
    """Knobs for random instance generation.

    With ``allow_unrestricted`` the generator skips the restriction and
    applicability gates and may produce sequence nodes with plain activity
    children as well as aggregations that violate the union bound — the
    negative control for the verifier.
    """

    seed: int = 0
    max_depth: int = 4
    max_children: int = 3
    activity_budget: int = 12
    self_loop_prob: float = 0.25
    agg_group_count: int = 2
    agg_group_size: int = 2
    inflate: bool = True
    allow_unrestricted: bool = False
    max_attempts: int = 200
    max_base_traces: int = 400


@dataclass(frozen=True)
class Instance:
    model: ProcessTree
    log: EventLog
    spec: AggSpec
    seed: int


def generate_instance(params: GenParams) -> Instance:
    rng = random.Random(params.seed)
    for _ in range(params.max_attempts):
        tree = _random_tree(rng, params)
        if tree is None:
            continue
        try:
            base = minimal_log(tree, trace_cap=params.max_base_traces)
        except LogSizeError:
            continue
        spec = _random_spec(tree, base, rng, params)
        if spec is None:
            continue
        log = _inflate(base, rng, params)
        if not params.allow_unrestricted:
            check = check_restricted(log)
            if not check.restricted:
                continue
            if not applicable(check.tree, spec).in_class:
                continue
        return Instance(model=tree, log=log, spec=spec, seed=params.seed)
    raise GenerationError(
        f"no viable instance after {params.max_attempts} attempts (seed {params.seed})"
    )


def _random_tree(rng: random.Random, params: GenParams) -> ProcessTree | None:
    names = [f"a{i}" for i in range(params.activity_budget)]
    rng.shuffle(names)

    def take_leaf() -> ProcessTree | None:
        if not names:
            return None
        name = names.pop()
        if rng.random() < params.self_loop_prob:
            return node("loop", leaf(name), tau())
        return leaf(name)

    def build(depth: int, allow_leaf: bool) -> ProcessTree | None:
        if depth >= params.max_depth or len(names) < 2:
            return take_leaf() if allow_leaf else None
        if allow_leaf and rng.random() < 0.45:
            return take_leaf()
        op = rng.choice(("seq", "xor", "and"))
        composite_children = op == "seq" and not params.allow_unrestricted
        if composite_children and depth + 1 >= params.max_depth:
            op = rng.choice(("xor", "and"))
            composite_children = False
        kids = []
        for _ in range(rng.randint(2, params.max_children)):
            child = build(depth + 1, not composite_children)
            if child is None:
                break
            kids.append(child)
        if len(kids) < 2:
            return take_leaf() if allow_leaf else None
        return node(op, *kids)

    tree = build(0, False)
    return None if tree is None else normal_form(tree)


def _random_spec(
    tree: ProcessTree, base: EventLog, rng: random.Random, params: GenParams
) -> AggSpec | None:
    acts = sorted(activities(tree))
    count = max(1, params.agg_group_count)
    size = max(2, params.agg_group_size)
    if count == 1 and size == 2 and not params.allow_unrestricted:
        size = 3  # a lone two-activity group never clears the union bound
    if len(acts) < count * size:
        return None
    profile = behavioral_profile(tree)
    trace_sets = [set(v) for v, _ in base.activity_variants()]
    for _ in range(10):
        chosen = rng.sample(acts, count * size)
        groups = {
            f"X{i + 1}": frozenset(chosen[i * size:(i + 1) * size])
            for i in range(count)
        }
        full = expand_spec(AggSpec(agg=groups, w_t=Fraction(1)), acts)
        spec = AggSpec(agg=groups, w_t=w_minmax(profile, full))
        full = AggSpec(agg=full.agg, w_t=spec.w_t)
        if params.allow_unrestricted or _choices_hold(
            derive_profile(profile, full), full, trace_sets
        ):
            return spec
    return None


def _choices_hold(abstract, full: AggSpec, trace_sets: list[set[str]]) -> bool:
    """True when no two choice-related abstract activities have members
    co-occurring in a trace.  Aggregations with such "false choices" are
    outside the class the round trip supports (stage one would have to drop
    events, leaving traces no reference trace can absorb), so the generator
    resamples them away."""
    names = sorted(full.agg)
    for i, x in enumerate(names):
        for y in names[i + 1:]:
            if abstract.relation(x, y) != CHOICE:
                continue
            gx, gy = full.agg[x], full.agg[y]
            if any(ts & gx and ts & gy for ts in trace_sets):
                return False
    return True


def _inflate(base: EventLog, rng: random.Random, params: GenParams) -> EventLog:
    log = EventLog()
    for trace, count in base.variants():
        factor = rng.randint(1, 10) if params.inflate else 1
        log.add(trace, count * factor)
    return log


# ---------------------------------------------------------------------------
# Randomized verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FailureRecord:
    seed: int
    model: str
    spec: str
    reason: str
    shrunk_model: str | None = None
    shrunk_spec: str | None = None


@dataclass
class VerificationSummary:
    instances: int = 0
    profile_checks: int = 0
    count_checks: int = 0
    iso_checks: int = 0
    failures: list[FailureRecord] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify(
    n: int,
    seed: int = 0,
    base: GenParams | None = None,
    negative_control: bool = False,
) -> VerificationSummary:
    base = base if base is not None else GenParams()
    if negative_control:
        base = replace(
            base, allow_unrestricted=True, agg_group_count=1, agg_group_size=2
        )
    summary = VerificationSummary()
    for i in range(n):
        instance = generate_instance(replace(base, seed=seed + i))
        report = roundtrip(instance.log, instance.spec)
        summary.instances += 1
        if report.abstract_model is not None:
            if _profile_realized(instance, report):
                summary.profile_checks += 1
            if _counts_match(report.abstract_model):
                summary.count_checks += 1
        if report.isomorphic is True:
            summary.iso_checks += 1
        else:
            summary.failures.append(_record_failure(instance, report))
    return summary


def _profile_realized(instance: Instance, report: RoundtripReport) -> bool:
    """The abstracted model's own behavioral profile must equal the profile
    derived from the concrete one."""
    derived = derive_profile(
        behavioral_profile(report.model),
        expand_spec(instance.spec, activities(report.model)),
    )
    model = report.abstract_model
    assert model is not None
    return behavioral_profile(model) == derived


def _counts_match(abstract_model: ProcessTree) -> bool:
    """Trace count and length distribution of the minimal log must match
    the predicted values."""
    predicted = ntl(abstract_model)
    actual = minimal_log(abstract_model)
    lengths = Counter(len(t) for t in actual.traces())
    return (
        actual.num_traces == predicted.tr
        and actual.num_events == predicted.size
        and lengths == Counter(predicted.lens)
    )


def _record_failure(instance: Instance, report: RoundtripReport) -> FailureRecord:
    reason = "; ".join(report.failures) if report.failures else "round trip failed"
    # only shrink instances that cleared the gates; an inapplicable instance
    # (negative control) is already its own explanation
    shrunk = _shrink(instance) if report.applicability.in_class else instance
    return FailureRecord(
        seed=instance.seed,
        model=render_tree(instance.model),
        spec=dump_agg_spec(instance.spec),
        reason=reason,
        shrunk_model=render_tree(shrunk.model) if shrunk is not instance else None,
        shrunk_spec=dump_agg_spec(shrunk.spec) if shrunk is not instance else None,
    )


def _shrink(instance: Instance, budget: int = 60) -> Instance:
    """Greedy reduction of a failing instance: drop subtrees, prune the
    aggregation accordingly, and keep any candidate that still fails."""
    best = instance
    improved = True
    while improved and budget > 0:
        improved = False
        for candidate in _shrink_candidates(best):
            budget -= 1
            try:
                report = roundtrip(candidate.log, candidate.spec)
                # a shrunk candidate must fail the same way: through the
                # gates, then out of sync
                still_failing = (
                    report.applicability.in_class and report.isomorphic is not True
                )
            except Exception:
                still_failing = False
            if still_failing:
                best = candidate
                improved = True
                break
            if budget <= 0:
                break
    return best


def _shrink_candidates(instance: Instance):
    for reduced in _tree_reductions(instance.model):
        reduced = normal_form(reduced)
        acts = activities(reduced)
        if len(acts) < 2:
            continue
        groups = {}
        for name, members in instance.spec.agg.items():
            kept = frozenset(members & acts)
            if len(kept) >= 2:
                groups[name] = kept
        if not groups:
            continue
        spec = AggSpec(agg=groups, w_t=instance.spec.w_t)
        try:
            log = minimal_log(reduced)
        except LogSizeError:
            continue
        yield Instance(model=reduced, log=log, spec=spec, seed=instance.seed)


def _tree_reductions(tree: ProcessTree):
    if not tree.is_operator or tree.label == "loop":
        return
    kids = tree.children
    for i in range(len(kids)):
        if len(kids) > 2:
            yield ProcessTree(tree.label, kids[:i] + kids[i + 1:])
        yield kids[i]
    for i, kid in enumerate(kids):
        for smaller in _tree_reductions(kid):
            yield ProcessTree(tree.label, kids[:i] + (smaller,) + kids[i + 1:])
