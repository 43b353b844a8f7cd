"""Knowledge-base document handling: load, serialise, validate.

The KB file is a single YAML document with one top-level section per
entity kind (see ``docs/kb_format.md``). Loading is order-independent:
entities may reference entities declared later; all references are
checked after parsing. ``validate_kb`` performs the semantic checks that
go beyond linking (weights, matrices, scales) and returns a report
instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

import yaml

from .errors import KBLoadError
from .model import (
    AttackAction,
    CalculationRule,
    ContainerAttackTechnique,
    ContextScenario,
    Impact,
    KnowledgeBase,
    PREDICATE_OPS,
    RatingScalesAndMatrices,
    RiskTreatment,
    RuleKind,
    SatisfactionState,
    SecurityAssumption,
    Standard,
    StandardRef,
    Trait,
    TraitExtractionRule,
    TraitKind,
    TraitPredicate,
    ValuePredicate,
    VerificationRule,
)

_SECTIONS = (
    "kb_version",
    "standards",
    "traits",
    "assumptions",
    "scenarios",
    "rules",
    "techniques",
    "impacts",
    "attack_actions",
    "treatments",
    "scales",
    "likelihood_matrix",
    "risk_matrix",
    "trait_extraction_rules",
    "lint_mappings",
)


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    code: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.upper()} [{self.code}] {self.location}: {self.message}"


@dataclass
class ValidationReport:
    issues: list[ValidationIssue]

    @property
    def errors(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors


# ---------------------------------------------------------------------------
# loading


def load_kb(document: str) -> KnowledgeBase:
    """Parse and link a KB document.

    Raises :class:`KBLoadError` for YAML syntax errors (with line and
    column), duplicate ids, bad enum literals, structural mistakes, and
    unresolved references (naming the dangling id).
    """
    try:
        raw = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else None
        raise KBLoadError(f"KB document is not valid YAML: {exc}", where) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise KBLoadError("KB document must be a mapping of sections", "document")
    for key in raw:
        if key not in _SECTIONS:
            raise KBLoadError(f"unknown section {key!r}", str(key))

    kb_version = raw.get("kb_version", "unversioned")
    if not isinstance(kb_version, str) or not kb_version:
        raise KBLoadError("kb_version must be a non-empty string", "kb_version")

    standards = _load_entities(raw, "standards", _parse_standard)
    traits = _load_entities(raw, "traits", _parse_trait)
    assumptions = _load_entities(raw, "assumptions", _parse_assumption)
    scenarios = _load_entities(raw, "scenarios", _parse_scenario)
    rules = _load_entities(raw, "rules", _parse_rule)
    techniques = _load_entities(raw, "techniques", _parse_technique)
    impacts = _load_entities(raw, "impacts", _parse_impact)
    attack_actions = _load_entities(raw, "attack_actions", _parse_action)
    treatments = _load_entities(raw, "treatments", _parse_treatment)
    scales = _parse_scales(raw)
    extraction = _parse_extraction_rules(raw)
    lint_mappings = _parse_lint_mappings(raw)

    kb = KnowledgeBase(
        kb_version=kb_version,
        standards=standards,
        traits=traits,
        assumptions=assumptions,
        scenarios=scenarios,
        rules=rules,
        techniques=techniques,
        impacts=impacts,
        attack_actions=attack_actions,
        treatments=treatments,
        scales=scales,
        trait_extraction_rules=extraction,
        lint_mappings=lint_mappings,
    )

    dangling = _reference_errors(kb)
    if dangling:
        first = dangling[0]
        raise KBLoadError(first.message, first.location)
    return kb


def _load_entities(
    raw: dict, section: str, parse: Callable[[dict, str], Any]
) -> dict[str, Any]:
    entries = raw.get(section) or []
    if not isinstance(entries, list):
        raise KBLoadError(f"section {section!r} must be a list", section)
    out: dict[str, Any] = {}
    for index, entry in enumerate(entries):
        loc = f"{section}[{index}]"
        if not isinstance(entry, dict):
            raise KBLoadError("entry must be a mapping", loc)
        entity = parse(entry, loc)
        if entity.id in out:
            raise KBLoadError(f"duplicate id {entity.id!r}", f"{section}[{entity.id}]")
        out[entity.id] = entity
    return out


def _req(entry: dict, key: str, loc: str) -> Any:
    if key not in entry:
        raise KBLoadError(f"missing required field {key!r}", loc)
    return entry[key]


def _str_field(entry: dict, key: str, loc: str) -> str:
    value = _req(entry, key, loc)
    if not isinstance(value, str) or not value:
        raise KBLoadError(f"field {key!r} must be a non-empty string", f"{loc}.{key}")
    return value


def _check_known_keys(entry: dict, known: tuple[str, ...], loc: str) -> None:
    for key in entry:
        if key not in known:
            raise KBLoadError(f"unknown field {key!r}", f"{loc}.{key}")


def _parse_enum(cls: type[Enum], value: Any, loc: str, what: str) -> Any:
    try:
        return cls(value)
    except ValueError:
        expected = ", ".join(m.value for m in cls)
        raise KBLoadError(
            f"bad {what} literal {value!r} (expected one of: {expected})", loc
        ) from None


def _parse_standard(entry: dict, loc: str) -> Standard:
    _check_known_keys(entry, ("id", "title", "version"), loc)
    return Standard(
        id=_str_field(entry, "id", loc),
        title=_str_field(entry, "title", loc),
        version=_str_field(entry, "version", loc),
    )


def _parse_trait(entry: dict, loc: str) -> Trait:
    _check_known_keys(entry, ("id", "description", "kind", "artefact_ref"), loc)
    artefact_ref = entry.get("artefact_ref")
    if artefact_ref is not None and not isinstance(artefact_ref, str):
        raise KBLoadError("artefact_ref must be a string", f"{loc}.artefact_ref")
    return Trait(
        id=_str_field(entry, "id", loc),
        description=_str_field(entry, "description", loc),
        kind=_parse_enum(TraitKind, _req(entry, "kind", loc), f"{loc}.kind", "trait kind"),
        artefact_ref=artefact_ref,
    )


def _parse_predicate(value: Any, loc: str) -> TraitPredicate:
    if not isinstance(value, dict) or len(value) != 1:
        raise KBLoadError(
            "predicate must be a single-key mapping (all_of / any_of / none_of)", loc
        )
    op, items = next(iter(value.items()))
    if op not in PREDICATE_OPS:
        raise KBLoadError(f"bad predicate operator {op!r}", loc)
    if items is None:
        items = []
    if not isinstance(items, list):
        raise KBLoadError(f"{op} must hold a list", f"{loc}.{op}")
    parsed: list[TraitPredicate | str] = []
    for index, item in enumerate(items):
        if isinstance(item, str):
            parsed.append(item)
        else:
            parsed.append(_parse_predicate(item, f"{loc}.{op}[{index}]"))
    return TraitPredicate(op=op, items=tuple(parsed))


def _parse_assumption(entry: dict, loc: str) -> SecurityAssumption:
    _check_known_keys(
        entry, ("id", "category", "description", "standards", "verification"), loc
    )
    refs: list[StandardRef] = []
    for index, ref in enumerate(entry.get("standards") or []):
        ref_loc = f"{loc}.standards[{index}]"
        if not isinstance(ref, dict):
            raise KBLoadError("standard reference must be a mapping", ref_loc)
        _check_known_keys(ref, ("standard", "section"), ref_loc)
        refs.append(
            StandardRef(
                standard_id=_str_field(ref, "standard", ref_loc),
                section=_str_field(ref, "section", ref_loc),
            )
        )
    verification = None
    if entry.get("verification") is not None:
        ver = entry["verification"]
        ver_loc = f"{loc}.verification"
        if not isinstance(ver, dict):
            raise KBLoadError("verification must be a mapping", ver_loc)
        _check_known_keys(ver, ("satisfied_when", "dissatisfied_when"), ver_loc)
        verification = VerificationRule(
            satisfied_when=_parse_predicate(
                _req(ver, "satisfied_when", ver_loc), f"{ver_loc}.satisfied_when"
            ),
            dissatisfied_when=_parse_predicate(
                _req(ver, "dissatisfied_when", ver_loc), f"{ver_loc}.dissatisfied_when"
            ),
        )
    return SecurityAssumption(
        id=_str_field(entry, "id", loc),
        category=_str_field(entry, "category", loc),
        description=_str_field(entry, "description", loc),
        standard_refs=tuple(refs),
        verification=verification,
    )


def _parse_scenario(entry: dict, loc: str) -> ContextScenario:
    _check_known_keys(entry, ("id", "description", "components", "states"), loc)
    components = entry.get("components") or []
    if not isinstance(components, list) or any(
        not isinstance(c, str) for c in components
    ):
        raise KBLoadError("components must be a list of strings", f"{loc}.components")
    states_raw = entry.get("states") or {}
    if not isinstance(states_raw, dict):
        raise KBLoadError("states must be a mapping", f"{loc}.states")
    states: dict[str, SatisfactionState] = {}
    for aid, literal in states_raw.items():
        states[str(aid)] = _parse_enum(
            SatisfactionState, literal, f"{loc}.states[{aid}]", "satisfaction state"
        )
    return ContextScenario(
        id=_str_field(entry, "id", loc),
        description=_str_field(entry, "description", loc),
        components=tuple(components),
        declared_states=states,
    )


def _parse_rule(entry: dict, loc: str) -> CalculationRule:
    _check_known_keys(entry, ("id", "kind", "weights"), loc)
    weights_raw = _req(entry, "weights", loc)
    if not isinstance(weights_raw, dict):
        raise KBLoadError("weights must be a mapping", f"{loc}.weights")
    weights: dict[str, int] = {}
    for aid, weight in weights_raw.items():
        if not isinstance(weight, int) or isinstance(weight, bool) or weight < 0:
            raise KBLoadError(
                f"weight for {aid!r} must be a non-negative integer",
                f"{loc}.weights[{aid}]",
            )
        weights[str(aid)] = weight
    return CalculationRule(
        id=_str_field(entry, "id", loc),
        kind=_parse_enum(RuleKind, _req(entry, "kind", loc), f"{loc}.kind", "rule kind"),
        weights=weights,
    )


def _parse_technique(entry: dict, loc: str) -> ContainerAttackTechnique:
    _check_known_keys(
        entry,
        (
            "id",
            "name",
            "attack_technique_ref",
            "required_traits",
            "exploitability_rule",
            "exposure_rule",
        ),
        loc,
    )
    required = entry.get("required_traits") or []
    if not isinstance(required, list) or any(not isinstance(t, str) for t in required):
        raise KBLoadError(
            "required_traits must be a list of trait ids", f"{loc}.required_traits"
        )
    return ContainerAttackTechnique(
        id=_str_field(entry, "id", loc),
        name=_str_field(entry, "name", loc),
        attack_technique_ref=_str_field(entry, "attack_technique_ref", loc),
        required_traits=frozenset(required),
        exploitability_rule=_str_field(entry, "exploitability_rule", loc),
        exposure_rule=_str_field(entry, "exposure_rule", loc),
    )


def _parse_impact(entry: dict, loc: str) -> Impact:
    _check_known_keys(entry, ("id", "description", "rating"), loc)
    return Impact(
        id=_str_field(entry, "id", loc),
        description=_str_field(entry, "description", loc),
        rating=_str_field(entry, "rating", loc),
    )


def _parse_action(entry: dict, loc: str) -> AttackAction:
    _check_known_keys(
        entry, ("id", "technique", "scenario", "impacts", "affected_component"), loc
    )
    impacts = entry.get("impacts") or []
    if not isinstance(impacts, list) or any(not isinstance(i, str) for i in impacts):
        raise KBLoadError("impacts must be a list of impact ids", f"{loc}.impacts")
    return AttackAction(
        id=_str_field(entry, "id", loc),
        technique_id=_str_field(entry, "technique", loc),
        scenario_id=_str_field(entry, "scenario", loc),
        impact_ids=tuple(impacts),
        affected_component=_str_field(entry, "affected_component", loc),
    )


def _parse_treatment(entry: dict, loc: str) -> RiskTreatment:
    _check_known_keys(
        entry,
        ("id", "description", "addresses", "guidelines", "implementing_traits"),
        loc,
    )
    addresses = entry.get("addresses") or []
    guidelines = entry.get("guidelines") or []
    implementing = entry.get("implementing_traits") or []
    for name, value in (
        ("addresses", addresses),
        ("guidelines", guidelines),
        ("implementing_traits", implementing),
    ):
        if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
            raise KBLoadError(f"{name} must be a list of strings", f"{loc}.{name}")
    return RiskTreatment(
        id=_str_field(entry, "id", loc),
        description=_str_field(entry, "description", loc),
        addresses_assumptions=tuple(addresses),
        guideline_refs=tuple(guidelines),
        implementing_traits=tuple(implementing),
    )


def _parse_scale(scales_raw: dict, key: str, loc: str) -> tuple[str, ...]:
    value = _req(scales_raw, key, loc)
    if (
        not isinstance(value, list)
        or not value
        or any(not isinstance(v, str) for v in value)
    ):
        raise KBLoadError(
            f"scale {key!r} must be a non-empty list of labels", f"{loc}.{key}"
        )
    return tuple(value)


def _parse_matrix(raw: dict, section: str) -> dict[tuple[str, str], str]:
    table = raw.get(section)
    if table is None:
        raise KBLoadError(f"missing required section {section!r}", section)
    if not isinstance(table, dict):
        raise KBLoadError("matrix must be a mapping of mappings", section)
    cells: dict[tuple[str, str], str] = {}
    for row_key, row in table.items():
        if not isinstance(row, dict):
            raise KBLoadError("matrix row must be a mapping", f"{section}[{row_key}]")
        for col_key, label in row.items():
            if not isinstance(label, str):
                raise KBLoadError(
                    "matrix cell must be a label string",
                    f"{section}[{row_key}][{col_key}]",
                )
            cells[(str(row_key), str(col_key))] = label
    return cells


def _parse_scales(raw: dict) -> RatingScalesAndMatrices:
    scales_raw = raw.get("scales")
    if scales_raw is None:
        raise KBLoadError("missing required section 'scales'", "scales")
    if not isinstance(scales_raw, dict):
        raise KBLoadError("scales must be a mapping", "scales")
    _check_known_keys(scales_raw, ("likelihood", "impact", "risk"), "scales")
    return RatingScalesAndMatrices(
        likelihood_scale=_parse_scale(scales_raw, "likelihood", "scales"),
        impact_scale=_parse_scale(scales_raw, "impact", "scales"),
        risk_scale=_parse_scale(scales_raw, "risk", "scales"),
        likelihood_matrix=_parse_matrix(raw, "likelihood_matrix"),
        risk_matrix=_parse_matrix(raw, "risk_matrix"),
    )


_VALUE_PREDICATE_KEYS = ("equals", "contains", "exists", "absent")


def _parse_extraction_rules(raw: dict) -> tuple[TraitExtractionRule, ...]:
    entries = raw.get("trait_extraction_rules") or []
    if not isinstance(entries, list):
        raise KBLoadError(
            "trait_extraction_rules must be a list", "trait_extraction_rules"
        )
    rules: list[TraitExtractionRule] = []
    for index, entry in enumerate(entries):
        loc = f"trait_extraction_rules[{index}]"
        if not isinstance(entry, dict):
            raise KBLoadError("entry must be a mapping", loc)
        _check_known_keys(entry, ("trait", "path") + _VALUE_PREDICATE_KEYS, loc)
        trait_id = _str_field(entry, "trait", loc)
        path = _str_field(entry, "path", loc)
        given = [k for k in _VALUE_PREDICATE_KEYS if k in entry]
        if len(given) != 1:
            raise KBLoadError(
                "exactly one of equals/contains/exists/absent is required", loc
            )
        op = given[0]
        value = entry[op]
        if op in ("exists", "absent"):
            if value is not True:
                raise KBLoadError(f"{op} must be `true`", f"{loc}.{op}")
            predicate = ValuePredicate(op=op)
        elif op == "equals":
            if not isinstance(value, (str, bool)):
                raise KBLoadError(
                    "equals takes a string or boolean", f"{loc}.equals"
                )
            predicate = ValuePredicate(op="equals", value=value)
        else:  # contains
            if not isinstance(value, str):
                raise KBLoadError("contains takes a string", f"{loc}.contains")
            predicate = ValuePredicate(op="contains", value=value)
        rules.append(
            TraitExtractionRule(
                trait_id=trait_id, source="compose", path=path, predicate=predicate
            )
        )
    return tuple(rules)


def _parse_lint_mappings(raw: dict) -> tuple[TraitExtractionRule, ...]:
    entries = raw.get("lint_mappings") or []
    if not isinstance(entries, list):
        raise KBLoadError("lint_mappings must be a list", "lint_mappings")
    mappings: list[TraitExtractionRule] = []
    for index, entry in enumerate(entries):
        loc = f"lint_mappings[{index}]"
        if not isinstance(entry, dict):
            raise KBLoadError("entry must be a mapping", loc)
        _check_known_keys(entry, ("trait", "code"), loc)
        mappings.append(
            TraitExtractionRule(
                trait_id=_str_field(entry, "trait", loc),
                source="lint",
                code=_str_field(entry, "code", loc),
            )
        )
    return tuple(mappings)


# ---------------------------------------------------------------------------
# serialisation


def dump_kb(kb: KnowledgeBase) -> str:
    """Serialise a KB to the document format. ``load_kb(dump_kb(kb)) == kb``."""
    doc: dict[str, Any] = {"kb_version": kb.kb_version}
    doc["standards"] = [
        {"id": s.id, "title": s.title, "version": s.version}
        for s in kb.standards.values()
    ]
    doc["traits"] = [
        _drop_none(
            {
                "id": t.id,
                "description": t.description,
                "kind": t.kind.value,
                "artefact_ref": t.artefact_ref,
            }
        )
        for t in kb.traits.values()
    ]
    doc["assumptions"] = [_dump_assumption(a) for a in kb.assumptions.values()]
    doc["scenarios"] = [
        {
            "id": s.id,
            "description": s.description,
            "components": list(s.components),
            "states": {aid: state.value for aid, state in s.declared_states.items()},
        }
        for s in kb.scenarios.values()
    ]
    doc["rules"] = [
        {"id": r.id, "kind": r.kind.value, "weights": dict(r.weights)}
        for r in kb.rules.values()
    ]
    doc["techniques"] = [
        {
            "id": t.id,
            "name": t.name,
            "attack_technique_ref": t.attack_technique_ref,
            "required_traits": sorted(t.required_traits),
            "exploitability_rule": t.exploitability_rule,
            "exposure_rule": t.exposure_rule,
        }
        for t in kb.techniques.values()
    ]
    doc["impacts"] = [
        {"id": i.id, "description": i.description, "rating": i.rating}
        for i in kb.impacts.values()
    ]
    doc["attack_actions"] = [
        {
            "id": a.id,
            "technique": a.technique_id,
            "scenario": a.scenario_id,
            "impacts": list(a.impact_ids),
            "affected_component": a.affected_component,
        }
        for a in kb.attack_actions.values()
    ]
    doc["treatments"] = [
        {
            "id": t.id,
            "description": t.description,
            "addresses": list(t.addresses_assumptions),
            "guidelines": list(t.guideline_refs),
            "implementing_traits": list(t.implementing_traits),
        }
        for t in kb.treatments.values()
    ]
    doc["scales"] = {
        "likelihood": list(kb.scales.likelihood_scale),
        "impact": list(kb.scales.impact_scale),
        "risk": list(kb.scales.risk_scale),
    }
    doc["likelihood_matrix"] = _dump_matrix(kb.scales.likelihood_matrix)
    doc["risk_matrix"] = _dump_matrix(kb.scales.risk_matrix)
    doc["trait_extraction_rules"] = [
        _dump_extraction_rule(r) for r in kb.trait_extraction_rules
    ]
    doc["lint_mappings"] = [
        {"trait": m.trait_id, "code": m.code} for m in kb.lint_mappings
    ]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def _drop_none(mapping: dict) -> dict:
    return {k: v for k, v in mapping.items() if v is not None}


def _dump_predicate(pred: TraitPredicate) -> dict:
    return {
        pred.op: [
            item if isinstance(item, str) else _dump_predicate(item)
            for item in pred.items
        ]
    }


def _dump_assumption(a: SecurityAssumption) -> dict:
    out: dict[str, Any] = {
        "id": a.id,
        "category": a.category,
        "description": a.description,
    }
    if a.standard_refs:
        out["standards"] = [
            {"standard": r.standard_id, "section": r.section} for r in a.standard_refs
        ]
    if a.verification:
        out["verification"] = {
            "satisfied_when": _dump_predicate(a.verification.satisfied_when),
            "dissatisfied_when": _dump_predicate(a.verification.dissatisfied_when),
        }
    return out


def _dump_matrix(matrix: dict[tuple[str, str], str]) -> dict[str, dict[str, str]]:
    nested: dict[str, dict[str, str]] = {}
    for (row, col), label in matrix.items():
        nested.setdefault(row, {})[col] = label
    return nested


def _dump_extraction_rule(rule: TraitExtractionRule) -> dict:
    out: dict[str, Any] = {"trait": rule.trait_id, "path": rule.path}
    pred = rule.predicate
    assert pred is not None
    if pred.op in ("exists", "absent"):
        out[pred.op] = True
    else:
        out[pred.op] = pred.value
    return out


# ---------------------------------------------------------------------------
# validation


def validate_kb(kb: KnowledgeBase) -> ValidationReport:
    """Semantic checks over a KB; pure (same KB, same report).

    Errors: unresolved references, zero-total-weight rules, technique
    rule-kind mismatches, empty required-trait or impact lists, non-total
    matrices, off-scale labels, duplicate (technique, scenario) action
    pairs, identical verification predicates, malformed scales. Warnings:
    non-monotone matrices, assumptions nothing can decide, treatments
    addressing assumptions no rule weighs.
    """
    issues: list[ValidationIssue] = []
    issues.extend(_reference_errors(kb))
    issues.extend(_scale_errors(kb))
    issues.extend(_rule_errors(kb))
    issues.extend(_technique_errors(kb))
    issues.extend(_action_errors(kb))
    issues.extend(_assumption_errors(kb))
    issues.extend(_matrix_errors(kb))
    issues.extend(_warning_checks(kb))
    return ValidationReport(issues=issues)


def _error(code: str, location: str, message: str) -> ValidationIssue:
    return ValidationIssue("error", code, location, message)


def _warning(code: str, location: str, message: str) -> ValidationIssue:
    return ValidationIssue("warning", code, location, message)


def _reference_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues: list[ValidationIssue] = []

    def check(kind: str, ref: str, pool: dict, location: str) -> None:
        if ref not in pool:
            issues.append(
                _error(
                    "unresolved_reference",
                    location,
                    f"unresolved reference to {kind} {ref!r}",
                )
            )

    for a in kb.assumptions.values():
        for ref in a.standard_refs:
            check(
                "standard",
                ref.standard_id,
                kb.standards,
                f"assumptions[{a.id}].standards",
            )
        if a.verification:
            for trait_id in sorted(
                a.verification.satisfied_when.trait_ids()
                | a.verification.dissatisfied_when.trait_ids()
            ):
                check(
                    "trait", trait_id, kb.traits, f"assumptions[{a.id}].verification"
                )
    for s in kb.scenarios.values():
        for aid in s.declared_states:
            check("assumption", aid, kb.assumptions, f"scenarios[{s.id}].states")
    for r in kb.rules.values():
        for aid in r.weights:
            check("assumption", aid, kb.assumptions, f"rules[{r.id}].weights")
    for t in kb.techniques.values():
        for trait_id in sorted(t.required_traits):
            check("trait", trait_id, kb.traits, f"techniques[{t.id}].required_traits")
        check("rule", t.exploitability_rule, kb.rules, f"techniques[{t.id}]")
        check("rule", t.exposure_rule, kb.rules, f"techniques[{t.id}]")
    for act in kb.attack_actions.values():
        check("technique", act.technique_id, kb.techniques, f"attack_actions[{act.id}]")
        check("scenario", act.scenario_id, kb.scenarios, f"attack_actions[{act.id}]")
        for iid in act.impact_ids:
            check("impact", iid, kb.impacts, f"attack_actions[{act.id}].impacts")
    for tr in kb.treatments.values():
        for aid in tr.addresses_assumptions:
            check("assumption", aid, kb.assumptions, f"treatments[{tr.id}].addresses")
        for trait_id in tr.implementing_traits:
            check(
                "trait",
                trait_id,
                kb.traits,
                f"treatments[{tr.id}].implementing_traits",
            )
    for index, rule in enumerate(kb.trait_extraction_rules):
        check(
            "trait", rule.trait_id, kb.traits, f"trait_extraction_rules[{index}]"
        )
    for index, mapping in enumerate(kb.lint_mappings):
        check("trait", mapping.trait_id, kb.traits, f"lint_mappings[{index}]")
    return issues


def _scale_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues = []
    for name, scale in (
        ("likelihood", kb.scales.likelihood_scale),
        ("impact", kb.scales.impact_scale),
        ("risk", kb.scales.risk_scale),
    ):
        if len(set(scale)) != len(scale):
            issues.append(
                _error("duplicate_scale_label", f"scales.{name}", "labels must be unique")
            )
    return issues


def _rule_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    return [
        _error(
            "zero_total_weight",
            f"rules[{r.id}]",
            "zero total weight: rating thresholds are undefined",
        )
        for r in kb.rules.values()
        if r.total_weight <= 0
    ]


def _technique_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues = []
    for t in kb.techniques.values():
        if not t.required_traits:
            issues.append(
                _error(
                    "empty_required_traits",
                    f"techniques[{t.id}]",
                    "required_traits must not be empty",
                )
            )
        for field_name, rule_id, kind in (
            ("exploitability_rule", t.exploitability_rule, RuleKind.EXPLOITABILITY),
            ("exposure_rule", t.exposure_rule, RuleKind.EXPOSURE),
        ):
            rule = kb.rules.get(rule_id)
            if rule is not None and rule.kind is not kind:
                issues.append(
                    _error(
                        "missing_rule_kind",
                        f"techniques[{t.id}].{field_name}",
                        f"missing rule kind {kind.value}: rule {rule_id!r} has kind"
                        f" {rule.kind.value}",
                    )
                )
    return issues


def _action_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues = []
    seen: dict[tuple[str, str], str] = {}
    for act in kb.attack_actions.values():
        if not act.impact_ids:
            issues.append(
                _error(
                    "empty_impacts",
                    f"attack_actions[{act.id}]",
                    "impacts must not be empty",
                )
            )
        pair = (act.technique_id, act.scenario_id)
        if pair in seen:
            issues.append(
                _error(
                    "duplicate_action_pair",
                    f"attack_actions[{act.id}]",
                    f"duplicate (technique, scenario) pair {pair!r}, already used by"
                    f" {seen[pair]!r}",
                )
            )
        else:
            seen[pair] = act.id
    return issues


def _assumption_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues = []
    for a in kb.assumptions.values():
        if not a.id:
            continue
        ver = a.verification
        if ver and ver.satisfied_when == ver.dissatisfied_when:
            issues.append(
                _error(
                    "identical_predicates",
                    f"assumptions[{a.id}].verification",
                    "satisfied_when and dissatisfied_when are identical expressions",
                )
            )
    for t in kb.treatments.values():
        if not t.addresses_assumptions:
            issues.append(
                _error(
                    "empty_addresses",
                    f"treatments[{t.id}]",
                    "addresses must not be empty",
                )
            )
    return issues


def _matrix_errors(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues = []
    scales = kb.scales
    expl_labels = tuple(r.value for r in scales.exploitability_scale)
    issues.extend(
        _one_matrix_errors(
            "likelihood_matrix",
            scales.likelihood_matrix,
            rows=expl_labels,
            cols=expl_labels,
            outputs=scales.likelihood_scale,
        )
    )
    issues.extend(
        _one_matrix_errors(
            "risk_matrix",
            scales.risk_matrix,
            rows=scales.likelihood_scale,
            cols=scales.impact_scale,
            outputs=scales.risk_scale,
        )
    )
    return issues


def _one_matrix_errors(
    name: str,
    matrix: dict[tuple[str, str], str],
    rows: tuple[str, ...],
    cols: tuple[str, ...],
    outputs: tuple[str, ...],
) -> list[ValidationIssue]:
    issues = []
    for row in rows:
        for col in cols:
            if (row, col) not in matrix:
                issues.append(
                    _error(
                        "matrix_not_total",
                        f"{name}[{row}][{col}]",
                        f"matrix not total: missing cell ({row}, {col})",
                    )
                )
    for (row, col), label in matrix.items():
        if row not in rows or col not in cols:
            issues.append(
                _error(
                    "label_off_scale",
                    f"{name}[{row}][{col}]",
                    f"cell ({row}, {col}) is outside the matrix axes",
                )
            )
        elif label not in outputs:
            issues.append(
                _error(
                    "label_off_scale",
                    f"{name}[{row}][{col}]",
                    f"output label {label!r} is not on the declared scale",
                )
            )
    return issues


def _warning_checks(kb: KnowledgeBase) -> list[ValidationIssue]:
    issues = []
    issues.extend(_monotonicity_warnings(kb))
    declared_somewhere = {
        aid for s in kb.scenarios.values() for aid in s.declared_states
    }
    for a in kb.assumptions.values():
        if a.verification is None and a.id not in declared_somewhere:
            issues.append(
                _warning(
                    "unverifiable_assumption",
                    f"assumptions[{a.id}]",
                    "no verification rule and no scenario declares a state;"
                    " only overrides can decide it",
                )
            )
    weighted = {aid for r in kb.rules.values() for aid in r.weights if r.weights[aid] > 0}
    for t in kb.treatments.values():
        if t.addresses_assumptions and not (
            set(t.addresses_assumptions) & weighted
        ):
            issues.append(
                _warning(
                    "ineffective_treatment",
                    f"treatments[{t.id}]",
                    "addresses only assumptions that no calculation rule weighs",
                )
            )
    return issues


def _monotonicity_warnings(kb: KnowledgeBase) -> list[ValidationIssue]:
    """Adjacent-cell check: a one-step-worse input must never map to a
    strictly less severe output."""
    issues = []
    scales = kb.scales
    expl = tuple(r.value for r in scales.exploitability_scale)  # worst first

    def severity_in(scale: tuple[str, ...], label: str) -> int | None:
        # worst-last scales; unknown labels already reported as errors
        return scale.index(label) if label in scale else None

    def check(
        name: str,
        matrix: dict[tuple[str, str], str],
        rows: tuple[str, ...],
        cols: tuple[str, ...],
        row_worst_first: bool,
        col_worst_first: bool,
        out_scale: tuple[str, ...],
    ) -> None:
        def out_sev(key: tuple[str, str]) -> int | None:
            label = matrix.get(key)
            return None if label is None else severity_in(out_scale, label)

        # step along rows (fixed column)
        for col in cols:
            for i in range(len(rows) - 1):
                worse, better = (
                    (rows[i], rows[i + 1]) if row_worst_first else (rows[i + 1], rows[i])
                )
                sev_worse, sev_better = out_sev((worse, col)), out_sev((better, col))
                if sev_worse is not None and sev_better is not None and sev_worse < sev_better:
                    issues.append(
                        _warning(
                            "matrix_not_monotone",
                            f"{name}[{worse}][{col}]",
                            f"({worse}, {col}) maps to a less severe label than"
                            f" ({better}, {col})",
                        )
                    )
        # step along columns (fixed row)
        for row in rows:
            for j in range(len(cols) - 1):
                worse, better = (
                    (cols[j], cols[j + 1]) if col_worst_first else (cols[j + 1], cols[j])
                )
                sev_worse, sev_better = out_sev((row, worse)), out_sev((row, better))
                if sev_worse is not None and sev_better is not None and sev_worse < sev_better:
                    issues.append(
                        _warning(
                            "matrix_not_monotone",
                            f"{name}[{row}][{worse}]",
                            f"({row}, {worse}) maps to a less severe label than"
                            f" ({row}, {better})",
                        )
                    )

    check(
        "likelihood_matrix",
        scales.likelihood_matrix,
        rows=expl,
        cols=expl,
        row_worst_first=True,
        col_worst_first=True,
        out_scale=scales.likelihood_scale,
    )
    check(
        "risk_matrix",
        scales.risk_matrix,
        rows=scales.likelihood_scale,
        cols=scales.impact_scale,
        row_worst_first=False,
        col_worst_first=False,
        out_scale=scales.risk_scale,
    )
    return issues
