#!/usr/bin/env python3
"""Serialize the worked-example fixtures (logs, models, aggregation specs)
into fixtures/ for use with the CLI and the README examples.

The canonical definitions live next to the tests (tests/conftest.py); this
script only writes them out, so the shipped files can never drift from
what the test suite checks.
"""
import sys
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from bpa.logs import format_compact, log_from_sequences, write_csv_log
from bpa.model_abstraction import dump_agg_spec, make_spec

from conftest import (
    CLAIMS_GROUPS,
    CLAIMS_MODEL,
    ORDERS_DESIGNED,
    ORDERS_GROUPS,
    ORDERS_TRACES,
    build_claims_log,
)


def main() -> None:
    out = ROOT / "fixtures"
    out.mkdir(exist_ok=True)

    claims = build_claims_log()
    (out / "claims_log.txt").write_text(format_compact(claims))
    write_csv_log(claims, out / "claims_log.csv")
    (out / "claims_model.txt").write_text(CLAIMS_MODEL + "\n")
    (out / "claims_agg.json").write_text(
        dump_agg_spec(make_spec(CLAIMS_GROUPS, Fraction(1, 2))) + "\n"
    )

    orders = log_from_sequences(ORDERS_TRACES)
    (out / "orders_log.txt").write_text(format_compact(orders))
    (out / "orders_model.txt").write_text(ORDERS_DESIGNED + "\n")
    (out / "orders_agg.json").write_text(
        dump_agg_spec(make_spec(ORDERS_GROUPS, Fraction(5, 9))) + "\n"
    )

    for path in sorted(out.iterdir()):
        print(f"wrote {path.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
