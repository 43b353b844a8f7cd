"""Pipeline orchestration and factsheet output.

``analyze`` runs the whole chain per service: trait extraction, state
derivation, scenario selection, applicability filtering, and assessment.
``render`` serialises to canonical JSON (sorted keys, fixed number
rendering, newline-terminated) or a markdown summary; ``exit_policy``
maps a factsheet to a CI-friendly process exit code.

Exact rationals appear in JSON as ``{"exact": "7/3", "decimal": "2.33"}``
so consumers get a reproducible value and a readable one.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__ as _tool_version
from .context import (
    AssumptionStateMap,
    ScenarioFitReport,
    derive_states,
    effective_states,
    select_scenario,
)
from .errors import InputError
from .ingest import (
    ObservedTraits,
    extract_traits,
    ingest_lint_report,
    load_assumption_overrides,
    merge_observed,
    parse_compose,
)
from .kb import dump_kb
from .model import KnowledgeBase
from .risk import RiskFinding, applicable_actions, assess_attack_action


@dataclass(frozen=True)
class InputRecord:
    name: str
    sha256: str


@dataclass(frozen=True)
class ServiceSection:
    service_name: str
    observed: ObservedTraits
    assumption_states: AssumptionStateMap
    scenario_fit: ScenarioFitReport
    findings: tuple[RiskFinding, ...]
    diagnostics: tuple[str, ...]


@dataclass(frozen=True)
class Factsheet:
    tool_version: str
    kb_version: str
    inputs: dict[str, InputRecord]
    services: dict[str, ServiceSection]
    diagnostics: tuple[str, ...]
    generated_at: str | None
    # severity order for exit_policy; not serialised
    risk_scale: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnalyzeOptions:
    """Knobs for one analysis run.

    ``deterministic`` (the default) omits the timestamp so identical
    inputs produce identical bytes. Input names are display names only;
    digests are computed from content.
    """

    service: str | None = None
    scenario: str | None = None
    deterministic: bool = True
    compose_name: str = "compose.yml"
    hadolint_name: str = "hadolint.json"
    overrides_name: str = "assumptions.yml"
    kb_name: str = "kb.yaml"


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def analyze(
    kb: KnowledgeBase,
    compose_text: str,
    lint_text: str | None = None,
    overrides_text: str | None = None,
    options: AnalyzeOptions | None = None,
) -> Factsheet:
    """Assess every service in the compose document against the KB."""
    options = options or AnalyzeOptions()
    if options.scenario is not None and options.scenario not in kb.scenarios:
        known = ", ".join(sorted(kb.scenarios)) or "<none>"
        raise InputError(f"unknown scenario {options.scenario!r} (scenarios: {known})")

    global_diagnostics: list[str] = []
    overrides = []
    if overrides_text is not None:
        overrides, override_warnings = load_assumption_overrides(overrides_text, kb)
        global_diagnostics.extend(override_warnings)

    service_entries = parse_compose(compose_text, options.service)
    if lint_text is not None and len(service_entries) > 1:
        global_diagnostics.append(
            f"hadolint report {options.hadolint_name} applied to all"
            f" {len(service_entries)} services"
        )

    sections: dict[str, ServiceSection] = {}
    for service_name, settings in service_entries:
        observed = extract_traits(
            settings,
            kb.trait_extraction_rules,
            service_name,
            source_name=options.compose_name,
        )
        if lint_text is not None:
            lint_observed = ingest_lint_report(
                lint_text, kb.lint_mappings, service_name
            )
            observed = merge_observed(observed, lint_observed)

        derived, derive_warnings = derive_states(observed, overrides, kb)
        scenario, fit_report = select_scenario(derived, kb, force=options.scenario)
        states, divergence_warnings = effective_states(scenario, derived)

        findings = [
            assess_attack_action(action, states, observed, kb)
            for action in applicable_actions(observed, scenario, kb)
        ]
        findings.sort(
            key=lambda f: (-kb.scales.risk_severity(f.risk_level), f.attack_action_id)
        )
        sections[service_name] = ServiceSection(
            service_name=service_name,
            observed=observed,
            assumption_states=states,
            scenario_fit=fit_report,
            findings=tuple(findings),
            diagnostics=tuple(derive_warnings + divergence_warnings),
        )

    inputs = {
        "compose": InputRecord(name=options.compose_name, sha256=_digest(compose_text)),
        # canonical-form digest: declaration order does not change identity
        "kb": InputRecord(name=options.kb_name, sha256=_digest(dump_kb(kb))),
    }
    if lint_text is not None:
        inputs["hadolint"] = InputRecord(
            name=options.hadolint_name, sha256=_digest(lint_text)
        )
    if overrides_text is not None:
        inputs["overrides"] = InputRecord(
            name=options.overrides_name, sha256=_digest(overrides_text)
        )

    generated_at = (
        None
        if options.deterministic
        else datetime.now(timezone.utc).isoformat(timespec="seconds")
    )
    return Factsheet(
        tool_version=_tool_version,
        kb_version=kb.kb_version,
        inputs=inputs,
        services=sections,
        diagnostics=tuple(global_diagnostics),
        generated_at=generated_at,
        risk_scale=kb.scales.risk_scale,
    )


# ---------------------------------------------------------------------------
# serialisation


def _rational(value: Fraction) -> dict[str, str]:
    value = Fraction(value)
    return {
        "exact": f"{value.numerator}/{value.denominator}",
        "decimal": f"{float(value):.2f}",
    }


def _evidence_json(entries) -> list[dict]:
    return [
        {"source": e.source, "locator": e.locator, "value": e.value} for e in entries
    ]


def _breakdown_json(breakdown) -> dict:
    return {
        "rule_id": breakdown.rule_id,
        "rating": breakdown.rating.value,
        "score": _rational(breakdown.score),
        "total_weight": breakdown.total_weight,
        "threshold_high": _rational(breakdown.threshold_high),
        "threshold_low": _rational(breakdown.threshold_low),
        "contributions": [
            {
                "assumption": c.assumption_id,
                "weight": c.weight,
                "state": c.state.value,
                "score": _rational(c.score),
                "product": _rational(c.product),
            }
            for c in breakdown.contributions
        ],
    }


def _finding_json(finding: RiskFinding) -> dict:
    return {
        "attack_action": finding.attack_action_id,
        "technique": {
            "id": finding.technique.id,
            "name": finding.technique.name,
            "attack_technique_ref": finding.technique.attack_technique_ref,
            "required_traits": [
                {
                    "trait": r.trait_id,
                    "present": r.present,
                    "evidence": _evidence_json(r.evidence),
                }
                for r in finding.technique.required_traits
            ],
        },
        "scenario": finding.scenario_id,
        "affected_component": finding.affected_component,
        "exploitability": _breakdown_json(finding.exploitability),
        "exposure": _breakdown_json(finding.exposure),
        "likelihood": finding.likelihood,
        "impacts": [
            {
                "impact": i.impact_id,
                "rating": i.rating,
                "risk_level": i.risk_level,
            }
            for i in finding.impacts
        ],
        "risk_level": finding.risk_level,
        "treatments": [
            {
                "treatment": t.treatment_id,
                "description": t.description,
                "effectiveness": _rational(t.effectiveness),
                "addressed_assumptions": [
                    {
                        "assumption": a.assumption_id,
                        "state": a.state.value,
                        "combined_weight": a.combined_weight,
                    }
                    for a in t.addressed
                ],
                "guidelines": list(t.guideline_refs),
                "implementing_traits": list(t.implementing_traits),
            }
            for t in finding.treatments
        ],
        "diagnostics": list(finding.diagnostics),
    }


def _section_json(section: ServiceSection) -> dict:
    return {
        "observed_traits": {
            "traits": sorted(section.observed.traits),
            "evidence": {
                trait_id: _evidence_json(entries)
                for trait_id, entries in sorted(section.observed.evidence.items())
            },
        },
        "assumption_states": {
            aid: {"state": entry.state.value, "provenance": entry.provenance.value}
            for aid, entry in sorted(section.assumption_states.items())
        },
        "scenario_fit": {
            "selected": section.scenario_fit.selected,
            "forced": section.scenario_fit.forced,
            "ranking": [
                {
                    "scenario": fit.scenario_id,
                    "exact_matches": fit.exact_matches,
                    "mismatches": fit.mismatches,
                    "unknowns": fit.unknowns,
                }
                for fit in section.scenario_fit.ranking
            ],
        },
        "findings": [_finding_json(f) for f in section.findings],
        "diagnostics": list(section.diagnostics),
    }


def factsheet_to_jsonable(factsheet: Factsheet) -> dict:
    """Plain-dict form of a factsheet (the JSON document structure)."""
    doc = {
        "tool_version": factsheet.tool_version,
        "kb_version": factsheet.kb_version,
        "inputs": {
            role: {"name": record.name, "sha256": record.sha256}
            for role, record in sorted(factsheet.inputs.items())
        },
        "services": {
            name: _section_json(section)
            for name, section in sorted(factsheet.services.items())
        },
        "diagnostics": list(factsheet.diagnostics),
    }
    if factsheet.generated_at is not None:
        doc["generated_at"] = factsheet.generated_at
    return doc


def render(factsheet: Factsheet, format: str = "json") -> str:
    """Render a factsheet as canonical JSON or a markdown summary."""
    if format == "json":
        doc = factsheet_to_jsonable(factsheet)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if format == "markdown":
        return _render_markdown(factsheet)
    raise InputError(f"unknown format {format!r} (expected json or markdown)")


def _render_markdown(factsheet: Factsheet) -> str:
    lines = ["# Container deployment risk factsheet", ""]
    lines.append(f"- Tool version: {factsheet.tool_version}")
    lines.append(f"- KB version: {factsheet.kb_version}")
    if factsheet.generated_at:
        lines.append(f"- Generated: {factsheet.generated_at}")
    for name, section in sorted(factsheet.services.items()):
        fit = section.scenario_fit
        lines.append("")
        lines.append(f"## Service `{name}`")
        lines.append("")
        forced = " (forced)" if fit.forced else ""
        lines.append(f"- Scenario: `{fit.selected}`{forced}")
        traits = ", ".join(f"`{t}`" for t in sorted(section.observed.traits)) or "none"
        lines.append(f"- Observed traits: {traits}")
        lines.append("")
        if not section.findings:
            lines.append("No applicable attack techniques identified.")
            continue
        lines.append(
            "| Attack action | Technique | Exploitability | Exposure |"
            " Likelihood | Risk level | Top treatment |"
        )
        lines.append("| --- | --- | --- | --- | --- | --- | --- |")
        for finding in section.findings:
            top = finding.treatments[0].treatment_id if finding.treatments else "-"
            technique = (
                f"{finding.technique.name} ({finding.technique.attack_technique_ref})"
            )
            lines.append(
                f"| {finding.attack_action_id} | {technique} |"
                f" {finding.exploitability.rating.value} |"
                f" {finding.exposure.rating.value} | {finding.likelihood} |"
                f" {finding.risk_level} | {top} |"
            )
    for diagnostic in factsheet.diagnostics:
        lines.append("")
        lines.append(f"> {diagnostic}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exit policy


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_KB_INVALID = 2
EXIT_RISK_FOUND = 3


def exit_policy(factsheet: Factsheet, fail_on: str | None = None) -> int:
    """0 = clean, 3 = at least one finding at or above ``fail_on``.

    ``fail_on`` must be a label on the KB risk scale; anything else is an
    :class:`InputError` (the CLI turns that into exit code 1).
    """
    if fail_on is None:
        return EXIT_OK
    if fail_on not in factsheet.risk_scale:
        scale = ", ".join(factsheet.risk_scale)
        raise InputError(f"fail-on label {fail_on!r} is not on the risk scale ({scale})")
    threshold = factsheet.risk_scale.index(fail_on)
    for section in factsheet.services.values():
        for finding in section.findings:
            if factsheet.risk_scale.index(finding.risk_level) >= threshold:
                return EXIT_RISK_FOUND
    return EXIT_OK
