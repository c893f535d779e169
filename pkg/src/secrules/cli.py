"""Command-line front end: mine a transaction file and report the costs."""
from __future__ import annotations

import argparse
import csv
import os
import sys

from .errors import (
    ContractError,
    DimensionError,
    ImprobableFailure,
    ParseError,
    ProtocolIntegrityError,
    UnsupportedConfiguration,
)
from .itemsets import (
    PartitionedDb,
    TransactionDb,
    deal_rows,
    parse_threshold,
    parse_transactions,
    partition_db,
)
from .mining import MiningResult, mine
from .report import render_cost_figures
from .simnet import cost_report, write_cost_csv

USAGE_ERRORS = (ParseError, ContractError, DimensionError, UnsupportedConfiguration)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secrules",
        description=(
            "Mine association rules across a horizontally split transaction "
            "database with secure multi-party set unions and threshold checks."
        ),
    )
    parser.add_argument("--input", required=True, help="transaction file, one row of item ids per line")
    parser.add_argument("--items", type=int, default=None, help="item universe size (default: inferred)")
    parser.add_argument("--players", type=int, default=3, help="number of database holders")
    parser.add_argument(
        "--partition", choices=("roundrobin", "random"), default="roundrobin",
        help="how rows are dealt to players",
    )
    parser.add_argument("--support", required=True, help="support level, e.g. 1/2 or 0.3")
    parser.add_argument("--confidence", required=True, help="confidence level, e.g. 3/5")
    parser.add_argument(
        "--protocol", choices=("unifi", "unifi-kc", "plaintext"), default="unifi"
    )
    parser.add_argument("--max-consequent", type=int, default=1, help="largest consequent size")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--modulus-bits", type=int, default=256, help="commutative cipher modulus size")
    parser.add_argument("--digest-bits", type=int, default=160, help="keyed digest width")
    parser.add_argument("--rules-out", default=None, help="write accepted rules as TSV here")
    parser.add_argument("--cost-out", default=None, help="write the cost accounting CSV here")
    parser.add_argument(
        "--reveal-supports", action="store_true",
        help="debug mode: announce global supports instead of verdict bits only",
    )
    parser.add_argument(
        "--no-figures", action="store_true",
        help="skip rendering cost figures next to the cost CSV",
    )
    return parser


def _format_items(itemset) -> str:
    return " ".join(str(i) for i in itemset.items())


def _write_rules(result: MiningResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(
            ["antecedent", "consequent", "support", "confidence", "confidence_decimal"]
        )
        for rule in result.rules:
            if rule.confidence is None:
                writer.writerow(
                    [_format_items(rule.antecedent), _format_items(rule.consequent), "", "", ""]
                )
            else:
                writer.writerow(
                    [
                        _format_items(rule.antecedent),
                        _format_items(rule.consequent),
                        rule.support,
                        f"{rule.confidence.numerator}/{rule.confidence.denominator}",
                        f"{float(rule.confidence):.6f}",
                    ]
                )


def _print_result(result: MiningResult, out=None) -> None:
    out = out or sys.stdout
    print(
        f"# protocol={result.protocol} support={result.support} "
        f"confidence={result.confidence}",
        file=out,
    )
    print(f"# frequent itemsets: {len(result.frequent)}", file=out)
    for itemset in result.frequent:
        if result.supports is not None:
            print(f"{_format_items(itemset)}\t{result.supports[itemset]}", file=out)
        else:
            print(_format_items(itemset), file=out)
    print(f"# rules: {len(result.rules)}", file=out)
    for rule in result.rules:
        line = f"{_format_items(rule.antecedent)} => {_format_items(rule.consequent)}"
        if rule.confidence is not None:
            line += (
                f"\tsupport={rule.support}"
                f"\tconfidence={rule.confidence.numerator}/{rule.confidence.denominator}"
            )
        print(line, file=out)


def _split_for_plaintext(db: TransactionDb, m: int, policy: str, seed: int) -> PartitionedDb:
    # The baseline has no multi-party requirement, so small M skips the
    # partition_db player-count check but deals rows the same way.
    if db.n < m:
        raise ContractError(f"cannot give {m} players at least one of {db.n} rows")
    assignment = deal_rows(db.n, m, policy, seed)
    return PartitionedDb(
        tuple(
            TransactionDb(db.width, tuple(db.rows[i] for i in indices))
            for indices in assignment
        )
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.protocol != "plaintext" and args.players <= 2:
        parser.error(f"--protocol {args.protocol} needs more than 2 players")
    if args.players < 1:
        parser.error("--players must be positive")

    try:
        with open(args.input) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"secrules: cannot read input: {exc}", file=sys.stderr)
        return 1

    try:
        db = parse_transactions(text, width=args.items)
        support = parse_threshold(args.support)
        confidence = parse_threshold(args.confidence)
        if args.players > 2:
            parts = partition_db(db, args.players, args.partition, args.seed)
        else:
            parts = _split_for_plaintext(db, args.players, args.partition, args.seed)
        result = mine(
            parts,
            support,
            confidence,
            protocol=args.protocol,
            reveal_supports=args.reveal_supports,
            seed=args.seed,
            max_consequent=args.max_consequent,
            modulus_bits=args.modulus_bits,
            digest_bits=args.digest_bits,
        )
    except USAGE_ERRORS + (ImprobableFailure, ProtocolIntegrityError) as exc:
        print(f"secrules: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    _print_result(result)

    if args.rules_out:
        _write_rules(result, args.rules_out)
        print(f"# rules written to {args.rules_out}")
    if args.cost_out:
        t_bits = args.modulus_bits if args.protocol == "unifi-kc" else None
        rows = cost_report(result.ledger, parts.m, t_bits=t_bits, h_bits=args.digest_bits)
        write_cost_csv(rows, args.cost_out)
        print(f"# cost report written to {args.cost_out}")
        if not args.no_figures:
            out_dir = os.path.dirname(os.path.abspath(args.cost_out))
            for path in render_cost_figures(rows, out_dir):
                print(f"# figure written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
