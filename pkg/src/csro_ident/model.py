"""Typed domain model for the container security risk knowledge base.

The model spans five knowledge domains: attack techniques, context
scenarios, attack actions, risk calculation rules, and the artefact layer
(deployment traits, standards, extraction rules). Entities reference each
other by id; a loaded :class:`KnowledgeBase` guarantees every reference
resolves and offers dict lookups keyed by id.

A :class:`KnowledgeBase` is treated as immutable once validated and is
safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union


class SatisfactionState(str, Enum):
    """Whether a security assumption holds, is refuted, or is undecided."""

    SATISFIED = "Satisfied"
    UNKNOWN = "Unknown"
    DISSATISFIED = "Dissatisfied"

    __str__ = str.__str__


class Rating(str, Enum):
    """Fixed three-step exploitability/exposure scale, worst first."""

    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    __str__ = str.__str__


#: Worst-to-best order shared by the exploitability and exposure scales.
EXPLOITABILITY_SCALE: tuple[Rating, ...] = (Rating.HIGH, Rating.MEDIUM, Rating.LOW)
EXPOSURE_SCALE: tuple[Rating, ...] = EXPLOITABILITY_SCALE


class TraitKind(str, Enum):
    COMPOSE_SETTING = "compose_setting"
    DOCKERFILE_RULE = "dockerfile_rule"
    MANUAL = "manual"

    __str__ = str.__str__


class RuleKind(str, Enum):
    EXPLOITABILITY = "Exploitability"
    EXPOSURE = "Exposure"

    __str__ = str.__str__


PREDICATE_OPS = ("all_of", "any_of", "none_of")


@dataclass(frozen=True)
class TraitPredicate:
    """Boolean combinator over trait presence.

    ``all_of([])`` is vacuously true, ``any_of([])`` never fires and
    ``none_of([])`` always fires; items may nest arbitrarily.
    """

    op: str
    items: tuple[Union["TraitPredicate", str], ...]

    def evaluate(self, present: Iterable[str]) -> bool:
        present = frozenset(present)
        hits = (
            (item in present) if isinstance(item, str) else item.evaluate(present)
            for item in self.items
        )
        if self.op == "all_of":
            return all(hits)
        if self.op == "any_of":
            return any(hits)
        return not any(hits)  # none_of

    def trait_ids(self) -> frozenset[str]:
        ids: set[str] = set()
        for item in self.items:
            if isinstance(item, str):
                ids.add(item)
            else:
                ids |= item.trait_ids()
        return frozenset(ids)


@dataclass(frozen=True)
class Trait:
    """A machine-checkable property of a container deployment."""

    id: str
    description: str
    kind: TraitKind
    artefact_ref: str | None = None


@dataclass(frozen=True)
class Standard:
    id: str
    title: str
    version: str


@dataclass(frozen=True)
class StandardRef:
    standard_id: str
    section: str


@dataclass(frozen=True)
class VerificationRule:
    """Trait predicates deciding an assumption's state from observations."""

    satisfied_when: TraitPredicate
    dissatisfied_when: TraitPredicate


@dataclass(frozen=True)
class SecurityAssumption:
    """A statement about the deployment whose satisfaction drives likelihood."""

    id: str
    category: str
    description: str
    standard_refs: tuple[StandardRef, ...] = ()
    verification: VerificationRule | None = None


@dataclass(frozen=True)
class ContextScenario:
    """A named baseline bundling declared assumption states."""

    id: str
    description: str
    components: tuple[str, ...] = ()
    declared_states: dict[str, SatisfactionState] = field(default_factory=dict)


@dataclass(frozen=True)
class CalculationRule:
    """Weighted assumption set feeding one likelihood factor."""

    id: str
    kind: RuleKind
    weights: dict[str, int] = field(default_factory=dict)

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())


@dataclass(frozen=True)
class ContainerAttackTechnique:
    id: str
    name: str
    attack_technique_ref: str
    required_traits: frozenset[str]
    exploitability_rule: str
    exposure_rule: str


@dataclass(frozen=True)
class Impact:
    id: str
    description: str
    rating: str


@dataclass(frozen=True)
class AttackAction:
    """A technique instantiated in one context scenario."""

    id: str
    technique_id: str
    scenario_id: str
    impact_ids: tuple[str, ...]
    affected_component: str


@dataclass(frozen=True)
class RiskTreatment:
    id: str
    description: str
    addresses_assumptions: tuple[str, ...]
    guideline_refs: tuple[str, ...] = ()
    implementing_traits: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValuePredicate:
    """Value check applied at a compose key path.

    ``op`` is one of ``equals`` (string or boolean value), ``contains``
    (list membership), ``exists`` or ``absent`` (key presence).
    """

    op: str
    value: str | bool | None = None


@dataclass(frozen=True)
class TraitExtractionRule:
    """Maps an artefact observation to a trait id.

    Compose-sourced rules carry a dotted key ``path`` (segment ``*``
    matches the service level) plus a :class:`ValuePredicate`;
    lint-sourced rules carry the linter rule ``code``.
    """

    trait_id: str
    source: str  # "compose" | "lint"
    path: str | None = None
    predicate: ValuePredicate | None = None
    code: str | None = None


@dataclass(frozen=True)
class RatingScalesAndMatrices:
    """Ordered label scales plus the likelihood and risk lookup tables.

    The likelihood, impact and risk scales list labels from least to most
    severe. Matrix keys are plain label pairs: ``(exploitability,
    exposure)`` for likelihood and ``(likelihood, impact)`` for risk.
    """

    likelihood_scale: tuple[str, ...]
    impact_scale: tuple[str, ...]
    risk_scale: tuple[str, ...]
    likelihood_matrix: dict[tuple[str, str], str]
    risk_matrix: dict[tuple[str, str], str]

    exploitability_scale = EXPLOITABILITY_SCALE
    exposure_scale = EXPOSURE_SCALE

    def likelihood_label(self, exploitability: str, exposure: str) -> str:
        return self.likelihood_matrix[(_label(exploitability), _label(exposure))]

    def risk_label(self, likelihood: str, impact: str) -> str:
        return self.risk_matrix[(_label(likelihood), _label(impact))]

    def likelihood_severity(self, label: str) -> int:
        return self.likelihood_scale.index(_label(label))

    def impact_severity(self, label: str) -> int:
        return self.impact_scale.index(_label(label))

    def risk_severity(self, label: str) -> int:
        return self.risk_scale.index(_label(label))

    def most_severe_risk(self, labels: Iterable[str]) -> str:
        return max(labels, key=self.risk_severity)


def _label(value: object) -> str:
    return value.value if isinstance(value, Enum) else str(value)


@dataclass(frozen=True)
class KnowledgeBase:
    """Fully linked knowledge base; all id references resolve.

    Collections are dicts keyed by entity id in document order. Consumers
    must iterate them in sorted-id order wherever ordering reaches the
    output, so that declaration order never influences results.
    """

    kb_version: str
    standards: dict[str, Standard]
    traits: dict[str, Trait]
    assumptions: dict[str, SecurityAssumption]
    scenarios: dict[str, ContextScenario]
    rules: dict[str, CalculationRule]
    techniques: dict[str, ContainerAttackTechnique]
    impacts: dict[str, Impact]
    attack_actions: dict[str, AttackAction]
    treatments: dict[str, RiskTreatment]
    scales: RatingScalesAndMatrices
    trait_extraction_rules: tuple[TraitExtractionRule, ...] = ()
    lint_mappings: tuple[TraitExtractionRule, ...] = ()

    def technique_rules(
        self, technique: ContainerAttackTechnique
    ) -> tuple[CalculationRule, CalculationRule]:
        """The technique's (exploitability, exposure) rule pair."""
        return (
            self.rules[technique.exploitability_rule],
            self.rules[technique.exposure_rule],
        )
