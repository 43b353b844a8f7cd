"""Assumption-state derivation and context-scenario selection.

States carry a provenance so downstream reports can show where each
verdict came from: an explicit override, trait evidence, a scenario
declaration, or the default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import InputError, KBError
from .ingest import AssumptionOverride, ObservedTraits, effective_overrides
from .model import ContextScenario, KnowledgeBase, SatisfactionState


class Provenance(str, Enum):
    DERIVED = "Derived"
    OVERRIDDEN = "Overridden"
    SCENARIO_DECLARED = "ScenarioDeclared"
    DEFAULT_UNKNOWN = "DefaultUnknown"

    __str__ = str.__str__


@dataclass(frozen=True)
class StateEntry:
    state: SatisfactionState
    provenance: Provenance


#: assumption id -> (state, provenance); total over all KB assumptions.
AssumptionStateMap = dict[str, StateEntry]


@dataclass(frozen=True)
class ScenarioFit:
    scenario_id: str
    exact_matches: int
    mismatches: int
    unknowns: int


@dataclass(frozen=True)
class ScenarioFitReport:
    selected: str
    forced: bool
    ranking: tuple[ScenarioFit, ...]


def derive_states(
    observed: ObservedTraits,
    overrides: list[AssumptionOverride],
    kb: KnowledgeBase,
) -> tuple[AssumptionStateMap, list[str]]:
    """Pre-scenario state map for every KB assumption, plus warnings.

    Overrides win outright (last entry per assumption). Otherwise a
    verification rule decides: Satisfied, Dissatisfied, or Unknown when
    neither predicate fires. Both predicates firing is resolved to
    Dissatisfied (conservative) with a conflict warning. Assumptions with
    no rule default to Unknown.
    """
    warnings: list[str] = []
    by_id = effective_overrides(overrides)
    states: AssumptionStateMap = {}
    for aid in sorted(kb.assumptions):
        assumption = kb.assumptions[aid]
        override = by_id.get(aid)
        if override is not None:
            states[aid] = StateEntry(override.state, Provenance.OVERRIDDEN)
            continue
        rule = assumption.verification
        if rule is None:
            states[aid] = StateEntry(SatisfactionState.UNKNOWN, Provenance.DEFAULT_UNKNOWN)
            continue
        satisfied = rule.satisfied_when.evaluate(observed.traits)
        dissatisfied = rule.dissatisfied_when.evaluate(observed.traits)
        if satisfied and dissatisfied:
            warnings.append(
                f"verification conflict for {aid}: both predicates hold;"
                " resolved to Dissatisfied"
            )
            state = SatisfactionState.DISSATISFIED
        elif satisfied:
            state = SatisfactionState.SATISFIED
        elif dissatisfied:
            state = SatisfactionState.DISSATISFIED
        else:
            state = SatisfactionState.UNKNOWN
        states[aid] = StateEntry(state, Provenance.DERIVED)
    return states, warnings


_DETERMINATE = (SatisfactionState.SATISFIED, SatisfactionState.DISSATISFIED)


def _fit(scenario: ContextScenario, derived: Mapping[str, StateEntry]) -> ScenarioFit:
    exact = mismatches = unknowns = 0
    for aid, declared in scenario.declared_states.items():
        entry = derived.get(
            aid, StateEntry(SatisfactionState.UNKNOWN, Provenance.DEFAULT_UNKNOWN)
        )
        if (
            entry.provenance in (Provenance.DERIVED, Provenance.OVERRIDDEN)
            and entry.state is declared
        ):
            exact += 1
        elif declared in _DETERMINATE and entry.state in _DETERMINATE:
            mismatches += 1  # determinate on both sides and unequal
        else:
            unknowns += 1
    return ScenarioFit(
        scenario_id=scenario.id,
        exact_matches=exact,
        mismatches=mismatches,
        unknowns=unknowns,
    )


def select_scenario(
    derived: Mapping[str, StateEntry],
    kb: KnowledgeBase,
    force: str | None = None,
) -> tuple[ContextScenario, ScenarioFitReport]:
    """Rank scenarios by fit and pick the best one.

    Ranking order: more exact matches first, then fewer mismatches, then
    lexicographically smaller scenario id; this is a total order, so the
    result is independent of KB declaration order. ``force`` bypasses the
    ranking (the report still carries it).
    """
    if not kb.scenarios:
        raise KBError("knowledge base declares no scenarios")
    fits = [_fit(kb.scenarios[sid], derived) for sid in sorted(kb.scenarios)]
    fits.sort(key=lambda f: (-f.exact_matches, f.mismatches, f.scenario_id))
    if force is not None:
        if force not in kb.scenarios:
            known = ", ".join(sorted(kb.scenarios))
            raise InputError(f"unknown scenario {force!r} (scenarios: {known})")
        selected = force
    else:
        selected = fits[0].scenario_id
    report = ScenarioFitReport(
        selected=selected, forced=force is not None, ranking=tuple(fits)
    )
    return kb.scenarios[selected], report


def effective_states(
    selected: ContextScenario, derived: Mapping[str, StateEntry]
) -> tuple[AssumptionStateMap, list[str]]:
    """Merge scenario declarations into the derived map; idempotent.

    Per assumption: an override always wins; determinate trait evidence
    wins next (a diverging scenario declaration is kept out and warned
    about); otherwise the scenario's declared state fills in; otherwise
    the derived entry stands.
    """
    warnings: list[str] = []
    states: AssumptionStateMap = {}
    for aid in sorted(derived):
        entry = derived[aid]
        declared = selected.declared_states.get(aid)
        if entry.provenance is Provenance.OVERRIDDEN:
            states[aid] = entry
        elif entry.provenance is Provenance.DERIVED and entry.state in _DETERMINATE:
            states[aid] = entry
            if declared is not None and declared in _DETERMINATE and declared is not entry.state:
                warnings.append(
                    f"artefact evidence for {aid} ({entry.state.value}) diverges from"
                    f" scenario {selected.id} ({declared.value}); evidence wins"
                )
        elif declared is not None:
            states[aid] = StateEntry(declared, Provenance.SCENARIO_DECLARED)
        else:
            states[aid] = entry
    return states, warnings
