"""Command-line interface.

Subcommands: ``analyze`` (run the pipeline and emit a factsheet),
``validate-kb`` (load + semantic checks), ``explain`` (show a technique's
rules, weights and thresholds). Exit codes: 0 success, 1 usage or input
error, 2 knowledge-base error, 3 findings at or above ``--fail-on``.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import InputError, KBError
from .factsheet import (
    AnalyzeOptions,
    EXIT_KB_INVALID,
    EXIT_USAGE,
    analyze,
    exit_policy,
    render,
)
from .kb import load_kb, validate_kb
from .model import KnowledgeBase


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for KB
    # problems, so route usage errors through the normal error path.
    def error(self, message: str):  # noqa: D102
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="csro-ident",
        description="Knowledge-base driven security risk identification"
        " for container deployments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_kb_option(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            "--kb",
            default=os.environ.get("CSRO_KB"),
            help="knowledge-base file (default: $CSRO_KB)",
        )

    analyze_parser = subparsers.add_parser(
        "analyze", help="assess a compose file and emit a risk factsheet"
    )
    add_kb_option(analyze_parser)
    analyze_parser.add_argument("--compose", required=True, help="compose file to assess")
    analyze_parser.add_argument("--hadolint", help="hadolint JSON report to ingest")
    analyze_parser.add_argument(
        "--assumptions", help="assumption-overrides file (YAML)"
    )
    analyze_parser.add_argument("--service", help="assess only this service")
    analyze_parser.add_argument(
        "--scenario", help="force a context scenario instead of ranking"
    )
    analyze_parser.add_argument(
        "--format", choices=("json", "markdown"), default="json"
    )
    analyze_parser.add_argument("--out", help="write output here instead of stdout")
    analyze_parser.add_argument(
        "--fail-on",
        help="exit 3 when a finding reaches this risk level",
    )
    analyze_parser.add_argument(
        "--deterministic",
        action="store_true",
        help="omit timestamps for byte-reproducible output",
    )

    validate_parser = subparsers.add_parser(
        "validate-kb", help="load a knowledge base and run all semantic checks"
    )
    add_kb_option(validate_parser)

    explain_parser = subparsers.add_parser(
        "explain", help="print a technique's rules, weights and thresholds"
    )
    add_kb_option(explain_parser)
    explain_parser.add_argument("--technique", required=True, help="technique id")

    return parser


def _read_file(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} {path!r}: {exc.strerror}") from exc


def _load_kb_arg(kb_path: str | None) -> KnowledgeBase:
    if not kb_path:
        raise _UsageError("no knowledge base given (use --kb or set CSRO_KB)")
    try:
        text = Path(kb_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise KBError(f"cannot read knowledge base {kb_path!r}: {exc.strerror}") from exc
    return load_kb(text)


def _cmd_analyze(args: argparse.Namespace) -> int:
    kb = _load_kb_arg(args.kb)
    report = validate_kb(kb)
    if not report.ok:
        for issue in report.errors:
            print(str(issue), file=sys.stderr)
        return EXIT_KB_INVALID

    compose_text = _read_file(args.compose, "compose file")
    lint_text = _read_file(args.hadolint, "hadolint report") if args.hadolint else None
    overrides_text = (
        _read_file(args.assumptions, "assumptions file") if args.assumptions else None
    )
    options = AnalyzeOptions(
        service=args.service,
        scenario=args.scenario,
        deterministic=args.deterministic,
        compose_name=os.path.basename(args.compose),
        hadolint_name=os.path.basename(args.hadolint) if args.hadolint else "hadolint.json",
        overrides_name=(
            os.path.basename(args.assumptions) if args.assumptions else "assumptions.yml"
        ),
        kb_name=os.path.basename(args.kb),
    )
    factsheet = analyze(kb, compose_text, lint_text, overrides_text, options)
    output = render(factsheet, args.format)
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    return exit_policy(factsheet, args.fail_on)


def _cmd_validate_kb(args: argparse.Namespace) -> int:
    kb = _load_kb_arg(args.kb)
    report = validate_kb(kb)
    for issue in report.issues:
        stream = sys.stderr if issue.severity == "error" else sys.stdout
        print(str(issue), file=stream)
    print(
        f"KB version {kb.kb_version}: {len(report.errors)} error(s),"
        f" {len(report.warnings)} warning(s)"
    )
    return EXIT_KB_INVALID if report.errors else 0


def _cmd_explain(args: argparse.Namespace) -> int:
    kb = _load_kb_arg(args.kb)
    technique = kb.techniques.get(args.technique)
    if technique is None:
        known = ", ".join(sorted(kb.techniques)) or "<none>"
        raise InputError(f"unknown technique {args.technique!r} (techniques: {known})")
    print(f"Technique: {technique.id}")
    print(f"  Name: {technique.name}")
    print(f"  External reference: {technique.attack_technique_ref}")
    print("  Required traits:")
    for trait_id in sorted(technique.required_traits):
        print(f"    - {trait_id}")
    for label, rule_id in (
        ("Exploitability", technique.exploitability_rule),
        ("Exposure", technique.exposure_rule),
    ):
        rule = kb.rules[rule_id]
        total = rule.total_weight
        theta_high = Fraction(total, 3)
        theta_low = Fraction(2 * total, 3)
        print(f"  {label} rule {rule.id}:")
        print(
            f"    total weight W = {total}; High below"
            f" {theta_high} ({float(theta_high):.2f}), Low at or above"
            f" {theta_low} ({float(theta_low):.2f})"
        )
        print("    weights:")
        for aid in sorted(rule.weights):
            print(f"      {aid} = {rule.weights[aid]}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "validate-kb":
            return _cmd_validate_kb(args)
        return _cmd_explain(args)
    except _UsageError as exc:
        print(f"csro-ident: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"csro-ident: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KBError as exc:
        print(f"csro-ident: knowledge-base error: {exc}", file=sys.stderr)
        return EXIT_KB_INVALID


if __name__ == "__main__":
    sys.exit(main())
