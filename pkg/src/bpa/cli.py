"""Command-line interface.

Subcommands cover the individual stages (discover, profile, minlog,
abstract-model, abstract-log) and the end-to-end flows (roundtrip,
verify).  Logs are read from CSV when the file ends in ``.csv`` and from
the compact one-trace-per-line format otherwise; model arguments accept a
file path or a literal tree expression.

Exit codes: 0 on success, 2 when a restriction or applicability gate
failed (the chain may still have produced output), 1 on everything else.
"""
from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

from .event_abstraction import MatchingError, context_for, ea1, ea2
from .logs import (
    EventLog,
    dfg_of_log,
    dfg_to_dot,
    format_compact,
    read_compact_file,
    read_csv_log,
    write_csv_log,
)
from .miner import check_restricted, discover
from .model_abstraction import applicable, load_agg_spec, ma_bpa
from .pipeline import roundtrip, verify
from .profiles import behavioral_profile, graph_to_dot, order_relations_graph
from .semantics import LogSizeError, minimal_log, ntl
from .trees import (
    ClassViolationError,
    TreeSyntaxError,
    parse_tree,
    render_tree,
    size,
    tree_to_dot,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GATE = 2  # restriction or applicability failure


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (TreeSyntaxError, ClassViolationError, LogSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument(
        "--format", choices=("text", "dot", "csv"), default="text",
        help="output format (default: text)",
    )
    common.add_argument("--out", metavar="DIR", help="write outputs into DIR instead of stdout")
    common.add_argument(
        "--attrs", action="store_true",
        help="treat CSV traces with different attributes as different",
    )

    parser = argparse.ArgumentParser(
        prog="bpa",
        description="Synchronized abstraction of process models and event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", parents=[common], help="discover a process tree from a log")
    p.add_argument("log", help="event log (.csv or compact format)")
    p.set_defaults(handler=cmd_discover)

    p = sub.add_parser("profile", parents=[common], help="behavioral profile of a model")
    p.add_argument("model", help="process tree (file or literal)")
    p.set_defaults(handler=cmd_profile)

    p = sub.add_parser("minlog", parents=[common], help="minimal log of a model")
    p.add_argument("model", help="process tree (file or literal)")
    p.set_defaults(handler=cmd_minlog)

    p = sub.add_parser("abstract-model", parents=[common], help="abstract a model")
    p.add_argument("model", help="process tree (file or literal)")
    p.add_argument("agg", help="aggregation spec (JSON file)")
    p.set_defaults(handler=cmd_abstract_model)

    p = sub.add_parser("abstract-log", parents=[common], help="abstract a log in sync with its model")
    p.add_argument("log", help="event log (.csv or compact format)")
    p.add_argument("agg", help="aggregation spec (JSON file)")
    p.set_defaults(handler=cmd_abstract_log)

    p = sub.add_parser("roundtrip", parents=[common], help="abstract model and log, rediscover, compare")
    p.add_argument("log", help="event log (.csv or compact format)")
    p.add_argument("agg", help="aggregation spec (JSON file)")
    p.set_defaults(handler=cmd_roundtrip)

    p = sub.add_parser("verify", parents=[common], help="random round trips with invariant checks")
    p.add_argument("-n", "--instances", type=int, default=25, help="number of instances")
    p.add_argument(
        "--negative-control", action="store_true",
        help="generate instances outside the supported class (failures expected)",
    )
    p.set_defaults(handler=cmd_verify)

    return parser


# ---------------------------------------------------------------------------
# Shared input/output helpers
# ---------------------------------------------------------------------------

def _read_log(args, path: str) -> EventLog:
    if Path(path).suffix.lower() == ".csv":
        return read_csv_log(path, attrs_identity=args.attrs)
    return read_compact_file(path)


def _read_tree(arg: str):
    p = Path(arg)
    text = p.read_text() if p.is_file() else arg
    return parse_tree(text.strip())


def _load_spec(path: str):
    return load_agg_spec(Path(path).read_text())


def _emit(args, filename: str, text: str) -> None:
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / filename
        target.write_text(text if text.endswith("\n") else text + "\n")
        print(f"wrote {target}", file=sys.stderr)
    else:
        print(text)


def _log_text(log: EventLog, fmt: str) -> tuple[str, str]:
    """Rendered log plus a file suffix for --out."""
    if fmt == "csv":
        buf = io.StringIO()
        write_csv_log(log, buf)
        return buf.getvalue().rstrip("\n"), "csv"
    if fmt == "dot":
        return dfg_to_dot(dfg_of_log(log)), "dot"
    return format_compact(log), "txt"


def _tree_text(tree, fmt: str) -> tuple[str, str]:
    if fmt == "dot":
        return tree_to_dot(tree), "dot"
    return render_tree(tree), "txt"


def _print_violations(report, label: str) -> None:
    print(f"{label}:", file=sys.stderr)
    for rule, path, msg in report.violations:
        where = f" at {path}" if path else ""
        print(f"  - [{rule}]{where} {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_discover(args) -> int:
    log = _read_log(args, args.log)
    check = check_restricted(log)
    text, suffix = _tree_text(check.tree, args.format)
    _emit(args, f"model.{suffix}", text)
    audit = check.audit
    print(
        f"cuts: {', '.join(audit.cuts_used) or 'none'}; "
        f"fall-throughs: {', '.join(audit.fallthroughs_used) or 'none'}",
        file=sys.stderr,
    )
    if audit.detected:
        print(f"detected: {', '.join(audit.detected)}", file=sys.stderr)
    if not check.restricted:
        _print_violations(check.report, "warning: log outside the restricted class")
    return EXIT_OK


def cmd_profile(args) -> int:
    tree = _read_tree(args.model)
    profile = behavioral_profile(tree)
    if args.format == "dot":
        _emit(args, "profile.dot", graph_to_dot(order_relations_graph(profile)))
    elif args.format == "csv":
        _emit(args, "profile.csv", profile.matrix_tsv().replace("\t", ","))
    else:
        _emit(args, "profile.tsv", profile.matrix_tsv())
    return EXIT_OK


def cmd_minlog(args) -> int:
    tree = _read_tree(args.model)
    log = minimal_log(tree)
    counts = ntl(tree)
    text, suffix = _log_text(log, args.format)
    _emit(args, f"minimal_log.{suffix}", text)
    print(f"{counts.tr} traces, {counts.size} events", file=sys.stderr)
    return EXIT_OK


def cmd_abstract_model(args) -> int:
    tree = _read_tree(args.model)
    spec = _load_spec(args.agg)
    report = applicable(tree, spec)
    if not report.in_class:
        _print_violations(report, "aggregation not applicable")
        return EXIT_GATE
    abstracted = ma_bpa(tree, spec)
    text, suffix = _tree_text(abstracted, args.format)
    _emit(args, f"abstract_model.{suffix}", text)
    print(f"size {size(tree)} -> {size(abstracted)}", file=sys.stderr)
    return EXIT_OK


def cmd_abstract_log(args) -> int:
    log = _read_log(args, args.log)
    spec = _load_spec(args.agg)
    model = discover(log)
    report = applicable(model, spec)
    if not report.in_class:
        _print_violations(report, "aggregation not applicable to the discovered model")
        return EXIT_GATE
    ctx = context_for(model, spec)
    try:
        abstracted = ea2(ea1(log, ctx), ctx.model)
    except MatchingError as exc:
        print(f"trace matching failed: {exc}", file=sys.stderr)
        return EXIT_GATE
    text, suffix = _log_text(abstracted, args.format)
    _emit(args, f"abstract_log.{suffix}", text)
    print(
        f"{log.num_traces} traces, {log.num_events} events -> "
        f"{abstracted.num_traces} traces, {abstracted.num_events} events",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    log = _read_log(args, args.log)
    spec = _load_spec(args.agg)
    report = roundtrip(log, spec)

    print(f"discovered model ({size(report.model)} nodes): {render_tree(report.model)}")
    print(f"restricted: {'yes' if report.restricted else 'no'}")
    if not report.restricted:
        _print_violations(report.restriction_report, "restriction violations")
    print(f"applicable: {'yes' if report.applicability.in_class else 'no'}")
    if not report.applicability.in_class:
        _print_violations(report.applicability, "applicability violations")
        return EXIT_GATE

    assert report.abstract_model is not None
    print(
        f"abstracted model ({size(report.abstract_model)} nodes): "
        f"{render_tree(report.abstract_model)}"
    )
    if args.out:
        _emit(args, "model.txt", render_tree(report.model))
        _emit(args, "abstract_model.txt", render_tree(report.abstract_model))
    if report.abstract_log is None:
        for line in report.failures:
            print(line, file=sys.stderr)
        return EXIT_GATE

    print(
        f"abstracted log: {report.abstract_log.num_traces} traces, "
        f"{report.abstract_log.num_events} events"
    )
    assert report.rediscovered is not None
    print(f"rediscovered model: {render_tree(report.rediscovered)}")
    print(f"isomorphic: {'yes' if report.isomorphic else 'no'}")
    if args.out:
        text, suffix = _log_text(report.abstract_log, "csv")
        _emit(args, f"abstract_log.{suffix}", text)
        _emit(args, "rediscovered_model.txt", render_tree(report.rediscovered))
    if not report.isomorphic:
        return EXIT_ERROR
    return EXIT_OK if report.restricted else EXIT_GATE


def cmd_verify(args) -> int:
    summary = verify(args.instances, seed=args.seed, negative_control=args.negative_control)
    for failure in summary.failures:
        print(f"FAIL seed={failure.seed}: {failure.reason}")
        print(f"  model: {failure.model}")
        print(f"  agg:   {failure.spec.replace(chr(10), ' ')}")
        if failure.shrunk_model:
            print(f"  shrunk model: {failure.shrunk_model}")
            assert failure.shrunk_spec is not None
            print(f"  shrunk agg:   {failure.shrunk_spec.replace(chr(10), ' ')}")
    print(
        f"{summary.instances} instances: {summary.iso_checks} isomorphic, "
        f"{summary.profile_checks} profile checks, {summary.count_checks} count checks, "
        f"{len(summary.failures)} failures"
    )
    return EXIT_OK if summary.ok else EXIT_ERROR
