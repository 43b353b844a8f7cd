"""Scoring and rating pipeline: weighted scores, thresholds, matrices,
treatment ranking, and per-attack-action assessment.

All arithmetic is exact. Satisfaction scores live on a half-integer grid,
so a rule score S is carried as a :class:`fractions.Fraction` and ratings
are decided by integer comparisons on N = 2S: High iff 3N < 2W, Low iff
3N >= 4W, Medium otherwise. The boundaries are therefore reproducible
bit-for-bit: S = W/3 rates Medium, S = 2W/3 rates Low.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .context import StateEntry
from .ingest import Evidence, ObservedTraits
from .model import (
    AttackAction,
    CalculationRule,
    ContainerAttackTechnique,
    ContextScenario,
    KnowledgeBase,
    RatingScalesAndMatrices,
    Rating,
    SatisfactionState,
)

_SCORE_BY_STATE = {
    SatisfactionState.SATISFIED: Fraction(1),
    SatisfactionState.UNKNOWN: Fraction(1, 2),
    SatisfactionState.DISSATISFIED: Fraction(0),
}


def satisfaction_score(state: SatisfactionState) -> Fraction:
    """Satisfied -> 1, Unknown -> 1/2, Dissatisfied -> 0."""
    return _SCORE_BY_STATE[SatisfactionState(state)]


@dataclass(frozen=True)
class Contribution:
    assumption_id: str
    weight: int
    state: SatisfactionState
    score: Fraction
    product: Fraction


@dataclass(frozen=True)
class ScoreBreakdown:
    """One rule's evaluation: contributions, score, thresholds, rating.

    ``threshold_high`` is W/3 (scores below it rate High) and
    ``threshold_low`` is 2W/3 (scores at or above it rate Low).
    """

    rule_id: str
    contributions: tuple[Contribution, ...]
    score: Fraction
    total_weight: int
    threshold_high: Fraction
    threshold_low: Fraction
    rating: Rating
    warnings: tuple[str, ...] = ()


def _state_of(value: object) -> SatisfactionState:
    if isinstance(value, StateEntry):
        return value.state
    return SatisfactionState(value)


def security_score(
    rule: CalculationRule, states: Mapping[str, object]
) -> tuple[Fraction, int, ScoreBreakdown]:
    """Evaluate one rule: S = sum(s_i * w_i), W = sum(w_i).

    ``states`` maps assumption ids to :class:`StateEntry` or bare
    :class:`SatisfactionState` values; an assumption missing from the map
    is treated as Unknown and reported in the breakdown's warnings.
    Contributions are listed in sorted assumption-id order.
    """
    contributions: list[Contribution] = []
    warnings: list[str] = []
    for aid in sorted(rule.weights):
        weight = rule.weights[aid]
        if aid in states:
            state = _state_of(states[aid])
        else:
            state = SatisfactionState.UNKNOWN
            warnings.append(
                f"no state for assumption {aid!r} in rule {rule.id!r};"
                " treated as Unknown"
            )
        score = satisfaction_score(state)
        contributions.append(
            Contribution(
                assumption_id=aid,
                weight=weight,
                state=state,
                score=score,
                product=score * weight,
            )
        )
    total_score = sum((c.product for c in contributions), Fraction(0))
    total_weight = rule.total_weight
    breakdown = ScoreBreakdown(
        rule_id=rule.id,
        contributions=tuple(contributions),
        score=total_score,
        total_weight=total_weight,
        threshold_high=Fraction(total_weight, 3),
        threshold_low=Fraction(2 * total_weight, 3),
        rating=rating_from_score(total_score, total_weight),
        warnings=tuple(warnings),
    )
    return total_score, total_weight, breakdown


def rating_from_score(score: Fraction | int, total_weight: int) -> Rating:
    """Map a score to Low/Medium/High by thirds of the total weight.

    Low iff S >= 2W/3; High iff S < W/3; Medium otherwise. Decided with
    integer comparisons on N = 2S, so the score must lie on the
    half-integer grid (which rule evaluation guarantees).
    """
    if total_weight <= 0:
        raise ValueError("total weight must be positive")
    score = Fraction(score)
    if score < 0 or score > total_weight:
        raise ValueError(f"score {score} outside [0, {total_weight}]")
    doubled = 2 * score
    if doubled.denominator != 1:
        raise ValueError(f"score {score} is not a multiple of 1/2")
    n = doubled.numerator
    if 3 * n < 2 * total_weight:
        return Rating.HIGH
    if 3 * n >= 4 * total_weight:
        return Rating.LOW
    return Rating.MEDIUM


def likelihood(
    exploitability: Rating | str,
    exposure: Rating | str,
    scales: RatingScalesAndMatrices,
) -> str:
    """Likelihood-matrix lookup for a rating pair."""
    return scales.likelihood_label(exploitability, exposure)


def risk_level(
    likelihood_label: str, impact_label: str, scales: RatingScalesAndMatrices
) -> str:
    """Risk-matrix lookup for (likelihood, impact)."""
    return scales.risk_label(likelihood_label, impact_label)


def applicable_actions(
    observed: ObservedTraits, scenario: ContextScenario, kb: KnowledgeBase
) -> list[AttackAction]:
    """Actions in the selected scenario whose technique requirements are met.

    Returned in stable action-id order.
    """
    actions = []
    for action_id in sorted(kb.attack_actions):
        action = kb.attack_actions[action_id]
        if action.scenario_id != scenario.id:
            continue
        technique = kb.techniques[action.technique_id]
        if technique.required_traits <= observed.traits:
            actions.append(action)
    return actions


@dataclass(frozen=True)
class AddressedAssumption:
    assumption_id: str
    state: SatisfactionState
    combined_weight: int


@dataclass(frozen=True)
class TreatmentRecommendation:
    treatment_id: str
    description: str
    addressed: tuple[AddressedAssumption, ...]
    effectiveness: Fraction
    guideline_refs: tuple[str, ...]
    implementing_traits: tuple[str, ...]


def rank_treatments(
    technique: ContainerAttackTechnique,
    states: Mapping[str, object],
    kb: KnowledgeBase,
) -> list[TreatmentRecommendation]:
    """Treatments worth applying against this technique, best first.

    A treatment is a candidate when it addresses at least one assumption
    that carries positive combined weight in the technique's two rules and
    is not currently Satisfied. Effectiveness sums, over all addressed
    assumptions, (w_exploit + w_expose) * (1 - s). Sorted by effectiveness
    descending, then treatment id.
    """
    exploit_rule, exposure_rule = kb.technique_rules(technique)
    combined: dict[str, int] = {}
    for rule in (exploit_rule, exposure_rule):
        for aid, weight in rule.weights.items():
            combined[aid] = combined.get(aid, 0) + weight

    recommendations: list[TreatmentRecommendation] = []
    for treatment_id in sorted(kb.treatments):
        treatment = kb.treatments[treatment_id]
        addressed: list[AddressedAssumption] = []
        effectiveness = Fraction(0)
        candidate = False
        for aid in sorted(treatment.addresses_assumptions):
            weight = combined.get(aid, 0)
            state = (
                _state_of(states[aid]) if aid in states else SatisfactionState.UNKNOWN
            )
            addressed.append(
                AddressedAssumption(
                    assumption_id=aid, state=state, combined_weight=weight
                )
            )
            effectiveness += (1 - satisfaction_score(state)) * weight
            if weight > 0 and state is not SatisfactionState.SATISFIED:
                candidate = True
        if candidate:
            recommendations.append(
                TreatmentRecommendation(
                    treatment_id=treatment.id,
                    description=treatment.description,
                    addressed=tuple(addressed),
                    effectiveness=effectiveness,
                    guideline_refs=treatment.guideline_refs,
                    implementing_traits=treatment.implementing_traits,
                )
            )
    recommendations.sort(key=lambda r: (-r.effectiveness, r.treatment_id))
    return recommendations


@dataclass(frozen=True)
class RequiredTraitEvidence:
    trait_id: str
    present: bool
    evidence: tuple[Evidence, ...]


@dataclass(frozen=True)
class TechniqueSummary:
    id: str
    name: str
    attack_technique_ref: str
    required_traits: tuple[RequiredTraitEvidence, ...]


@dataclass(frozen=True)
class ImpactAssessment:
    impact_id: str
    rating: str
    risk_level: str


@dataclass(frozen=True)
class RiskFinding:
    """One assessed attack action, ready for the factsheet."""

    attack_action_id: str
    technique: TechniqueSummary
    scenario_id: str
    affected_component: str
    exploitability: ScoreBreakdown
    exposure: ScoreBreakdown
    likelihood: str
    impacts: tuple[ImpactAssessment, ...]
    risk_level: str
    treatments: tuple[TreatmentRecommendation, ...]
    diagnostics: tuple[str, ...]


def assess_attack_action(
    action: AttackAction,
    states: Mapping[str, object],
    observed: ObservedTraits,
    kb: KnowledgeBase,
) -> RiskFinding:
    """Full assessment of one applicable attack action.

    Pure function: both rule breakdowns, the likelihood lookup, one risk
    level per impact (overall = most severe on the KB risk scale), and
    ranked treatments.
    """
    technique = kb.techniques[action.technique_id]
    exploit_rule, exposure_rule = kb.technique_rules(technique)
    _, _, exploit_breakdown = security_score(exploit_rule, states)
    _, _, exposure_breakdown = security_score(exposure_rule, states)
    likelihood_label = likelihood(
        exploit_breakdown.rating, exposure_breakdown.rating, kb.scales
    )
    impacts = tuple(
        ImpactAssessment(
            impact_id=impact_id,
            rating=kb.impacts[impact_id].rating,
            risk_level=risk_level(
                likelihood_label, kb.impacts[impact_id].rating, kb.scales
            ),
        )
        for impact_id in sorted(action.impact_ids)
    )
    overall = kb.scales.most_severe_risk(i.risk_level for i in impacts)
    required = tuple(
        RequiredTraitEvidence(
            trait_id=trait_id,
            present=trait_id in observed.traits,
            evidence=observed.evidence.get(trait_id, ()),
        )
        for trait_id in sorted(technique.required_traits)
    )
    return RiskFinding(
        attack_action_id=action.id,
        technique=TechniqueSummary(
            id=technique.id,
            name=technique.name,
            attack_technique_ref=technique.attack_technique_ref,
            required_traits=required,
        ),
        scenario_id=action.scenario_id,
        affected_component=action.affected_component,
        exploitability=exploit_breakdown,
        exposure=exposure_breakdown,
        likelihood=likelihood_label,
        impacts=impacts,
        risk_level=overall,
        treatments=tuple(rank_treatments(technique, states, kb)),
        diagnostics=exploit_breakdown.warnings + exposure_breakdown.warnings,
    )
