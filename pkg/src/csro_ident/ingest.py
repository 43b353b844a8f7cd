"""Artefact ingestion: compose files, linter reports, assumption overrides.

All operations are pure functions of their inputs and safe to run
concurrently per service. Extraction is driven entirely by the KB's
trait-extraction rules, so new compose settings or linter codes need a KB
edit, not a code change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import yaml

from .errors import ComposeParseError, LintReportError, OverridesError
from .model import (
    KnowledgeBase,
    SatisfactionState,
    TraitExtractionRule,
)


@dataclass(frozen=True, order=True)
class Evidence:
    """Where a trait was observed: source file, locator, raw value."""

    source: str
    locator: str
    value: str


@dataclass(frozen=True)
class ObservedTraits:
    """The trait set derived for one service, with per-trait evidence.

    Evidence tuples are kept in canonical (source, locator, value) order
    so equal observations compare equal regardless of rule order.
    """

    service_name: str
    traits: frozenset[str]
    evidence: dict[str, tuple[Evidence, ...]]


@dataclass(frozen=True)
class LintFinding:
    code: str
    severity: str
    file: str
    line: int
    message: str


@dataclass(frozen=True)
class AssumptionOverride:
    assumption_id: str
    state: SatisfactionState
    justification: str


def _build_observed(
    service_name: str, collected: dict[str, list[Evidence]]
) -> ObservedTraits:
    evidence = {tid: tuple(sorted(entries)) for tid, entries in collected.items()}
    return ObservedTraits(
        service_name=service_name,
        traits=frozenset(evidence),
        evidence=evidence,
    )


# ---------------------------------------------------------------------------
# compose


def parse_compose(
    text: str, selector: str | None = None
) -> list[tuple[str, dict]]:
    """Split a compose document into per-service raw settings trees.

    Returns ``(service_name, settings)`` pairs in document order, or only
    the selected service. Unknown keys are preserved; extraction ignores
    them.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ComposeParseError(f"compose document is not valid YAML{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ComposeParseError("compose document must be a mapping")
    if "services" not in doc:
        raise ComposeParseError("compose document has no services section")
    services = doc["services"] or {}
    if not isinstance(services, dict):
        raise ComposeParseError("services section must be a mapping")

    entries: list[tuple[str, dict]] = []
    for name, settings in services.items():
        if settings is None:
            settings = {}
        if not isinstance(settings, dict):
            raise ComposeParseError(f"service {name!r} must be a mapping")
        entries.append((str(name), settings))

    if selector is not None:
        matches = [e for e in entries if e[0] == selector]
        if not matches:
            known = ", ".join(sorted(name for name, _ in entries)) or "<none>"
            raise ComposeParseError(
                f"unknown service {selector!r} (services: {known})"
            )
        return matches
    return entries


_CAP_PATH_KEYS = ("cap_add", "cap_drop")


def _normalize_capability(value: str) -> str:
    cap = value.strip().upper()
    return cap if cap.startswith("CAP_") else f"CAP_{cap}"


def _render_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return str(value)
    return json.dumps(value, sort_keys=True)


def _scalar_equals(node: object, expected: str | bool | None) -> bool:
    if isinstance(expected, bool):
        return isinstance(node, bool) and node is expected
    if isinstance(node, bool):
        return False
    if isinstance(node, str):
        return node == expected
    if isinstance(node, (int, float)):
        return str(node) == expected
    return False


def _list_contains(node: object, expected: str, capability: bool) -> str | None:
    """Return the matched raw element, or None."""
    items = node if isinstance(node, list) else [node]
    want = _normalize_capability(expected) if capability else expected
    for item in items:
        if not isinstance(item, (str, int, float)) or isinstance(item, bool):
            continue
        raw = str(item)
        got = _normalize_capability(raw) if capability else raw
        if got == want:
            return raw
    return None


def extract_traits(
    settings: dict,
    rules: tuple[TraitExtractionRule, ...] | list[TraitExtractionRule],
    service_name: str,
    source_name: str = "compose.yml",
) -> ObservedTraits:
    """Apply compose-sourced extraction rules to one service's settings.

    A rule path is dotted, rooted at ``services``; the second segment is
    ``*`` (any service) or a literal service name. Value matching is
    case-sensitive except under ``cap_add``/``cap_drop``, where both
    sides are upper-cased and ``CAP_``-prefixed before comparison. The
    result is independent of rule order.
    """
    collected: dict[str, list[Evidence]] = {}
    for rule in rules:
        if rule.source != "compose" or not rule.path or rule.predicate is None:
            continue
        segments = rule.path.split(".")
        if len(segments) < 2 or segments[0] != "services":
            continue
        if segments[1] not in ("*", service_name):
            continue
        key_path = segments[2:]

        node: object = settings
        found = True
        for segment in key_path:
            if isinstance(node, dict) and segment in node:
                node = node[segment]
            else:
                found = False
                break

        locator = ".".join(["services", service_name, *key_path])
        pred = rule.predicate
        matched_value: str | None = None
        if pred.op == "exists":
            if found:
                matched_value = _render_value(node)
        elif pred.op == "absent":
            if not found:
                matched_value = "absent"
        elif pred.op == "equals":
            if found and _scalar_equals(node, pred.value):
                matched_value = _render_value(node)
        elif pred.op == "contains":
            if found and isinstance(pred.value, str):
                capability = bool(key_path) and key_path[-1] in _CAP_PATH_KEYS
                matched = _list_contains(node, pred.value, capability)
                if matched is not None:
                    matched_value = matched
        if matched_value is not None:
            collected.setdefault(rule.trait_id, []).append(
                Evidence(source=source_name, locator=locator, value=matched_value)
            )
    return _build_observed(service_name, collected)


# ---------------------------------------------------------------------------
# linter report


def parse_lint_report(text: str) -> list[LintFinding]:
    """Parse a linter JSON report (array of finding objects)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LintReportError(f"lint report is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise LintReportError("lint report must be a JSON array of findings")
    findings: list[LintFinding] = []
    for index, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise LintReportError(f"finding {index} is not an object")
        code = entry.get("code")
        if not isinstance(code, str) or not code:
            raise LintReportError(f"finding {index} is missing the code field")
        line = entry.get("line", 1)
        if not isinstance(line, int) or isinstance(line, bool) or line < 1:
            raise LintReportError(f"finding {index}: line must be a positive integer")
        findings.append(
            LintFinding(
                code=code,
                severity=str(entry.get("level", "")),
                file=str(entry.get("file", "<dockerfile>")),
                line=line,
                message=str(entry.get("message", "")),
            )
        )
    return findings


def ingest_lint_report(
    text: str,
    mappings: tuple[TraitExtractionRule, ...] | list[TraitExtractionRule],
    service_name: str,
) -> ObservedTraits:
    """Turn mapped linter findings into traits.

    Duplicate findings for one code contribute several evidence entries
    to a single trait; unmapped codes are ignored.
    """
    findings = parse_lint_report(text)
    by_code: dict[str, list[str]] = {}
    for mapping in mappings:
        if mapping.source == "lint" and mapping.code:
            by_code.setdefault(mapping.code, []).append(mapping.trait_id)

    collected: dict[str, list[Evidence]] = {}
    for finding in findings:
        for trait_id in by_code.get(finding.code, ()):
            collected.setdefault(trait_id, []).append(
                Evidence(
                    source=finding.file,
                    locator=f"{finding.code}:{finding.line}",
                    value=finding.message,
                )
            )
    return _build_observed(service_name, collected)


# ---------------------------------------------------------------------------
# assumption overrides


def load_assumption_overrides(
    text: str, kb: KnowledgeBase
) -> tuple[list[AssumptionOverride], list[str]]:
    """Parse the overrides document; returns (overrides, warnings).

    Entries keep file order; a later entry for the same assumption
    supersedes earlier ones, which is reported as a warning.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise OverridesError(f"overrides document is not valid YAML: {exc}") from exc
    if doc is None:
        return [], []
    if not isinstance(doc, list):
        raise OverridesError("overrides document must be a list of entries")

    overrides: list[AssumptionOverride] = []
    warnings: list[str] = []
    seen: dict[str, int] = {}
    for index, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise OverridesError(f"override entry {index} must be a mapping")
        assumption_id = entry.get("assumption")
        if not isinstance(assumption_id, str) or not assumption_id:
            raise OverridesError(f"override entry {index} is missing the assumption id")
        if assumption_id not in kb.assumptions:
            raise OverridesError(
                f"override entry {index} names unknown assumption {assumption_id!r}"
            )
        literal = entry.get("state")
        try:
            state = SatisfactionState(literal)
        except ValueError:
            raise OverridesError(
                f"override entry {index}: bad satisfaction state literal {literal!r}"
            ) from None
        justification = entry.get("justification", "")
        if not isinstance(justification, str):
            raise OverridesError(f"override entry {index}: justification must be a string")
        if assumption_id in seen:
            warnings.append(
                f"duplicate override for {assumption_id}: entry {index} supersedes"
                f" entry {seen[assumption_id]}"
            )
        seen[assumption_id] = index
        overrides.append(
            AssumptionOverride(
                assumption_id=assumption_id, state=state, justification=justification
            )
        )
    return overrides, warnings


def effective_overrides(
    overrides: list[AssumptionOverride],
) -> dict[str, AssumptionOverride]:
    """Last-wins reduction of an override list."""
    return {o.assumption_id: o for o in overrides}


# ---------------------------------------------------------------------------
# merging


def merge_observed(a: ObservedTraits, b: ObservedTraits) -> ObservedTraits:
    """Union of two observations for the same service; evidence concatenates."""
    if a.service_name != b.service_name:
        raise ValueError(
            f"service name mismatch: {a.service_name!r} vs {b.service_name!r}"
        )
    collected: dict[str, list[Evidence]] = {
        tid: list(entries) for tid, entries in a.evidence.items()
    }
    for tid, entries in b.evidence.items():
        collected.setdefault(tid, []).extend(entries)
    return _build_observed(a.service_name, collected)
