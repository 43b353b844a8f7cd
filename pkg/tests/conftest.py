from __future__ import annotations

import copy
from pathlib import Path

import pytest

from csro_ident import load_reference_kb
from csro_ident.model import (
    AttackAction,
    CalculationRule,
    ContainerAttackTechnique,
    ContextScenario,
    Impact,
    KnowledgeBase,
    RatingScalesAndMatrices,
    RiskTreatment,
    SecurityAssumption,
    Trait,
)

FIXTURES = Path(__file__).parent / "fixtures"

DEFAULT_SCALES = {
    "likelihood": ("Unlikely", "Possible", "Likely"),
    "impact": ("Minor", "Moderate", "Disastrous"),
    "risk": ("Low", "Moderate", "Major"),
}

DEFAULT_LIKELIHOOD_MATRIX = {
    ("High", "High"): "Likely",
    ("High", "Medium"): "Likely",
    ("High", "Low"): "Possible",
    ("Medium", "High"): "Likely",
    ("Medium", "Medium"): "Possible",
    ("Medium", "Low"): "Unlikely",
    ("Low", "High"): "Possible",
    ("Low", "Medium"): "Unlikely",
    ("Low", "Low"): "Unlikely",
}

DEFAULT_RISK_MATRIX = {
    ("Unlikely", "Minor"): "Low",
    ("Unlikely", "Moderate"): "Low",
    ("Unlikely", "Disastrous"): "Moderate",
    ("Possible", "Minor"): "Low",
    ("Possible", "Moderate"): "Moderate",
    ("Possible", "Disastrous"): "Major",
    ("Likely", "Minor"): "Moderate",
    ("Likely", "Moderate"): "Major",
    ("Likely", "Disastrous"): "Major",
}


def default_scales() -> RatingScalesAndMatrices:
    return RatingScalesAndMatrices(
        likelihood_scale=DEFAULT_SCALES["likelihood"],
        impact_scale=DEFAULT_SCALES["impact"],
        risk_scale=DEFAULT_SCALES["risk"],
        likelihood_matrix=dict(DEFAULT_LIKELIHOOD_MATRIX),
        risk_matrix=dict(DEFAULT_RISK_MATRIX),
    )


def build_kb(
    *,
    traits: tuple[Trait, ...] = (),
    assumptions: tuple[SecurityAssumption, ...] = (),
    scenarios: tuple[ContextScenario, ...] = (),
    rules: tuple[CalculationRule, ...] = (),
    techniques: tuple[ContainerAttackTechnique, ...] = (),
    impacts: tuple[Impact, ...] = (),
    actions: tuple[AttackAction, ...] = (),
    treatments: tuple[RiskTreatment, ...] = (),
    scales: RatingScalesAndMatrices | None = None,
) -> KnowledgeBase:
    """Assemble a KnowledgeBase directly for synthetic test setups."""
    return KnowledgeBase(
        kb_version="test",
        standards={},
        traits={t.id: t for t in traits},
        assumptions={a.id: a for a in assumptions},
        scenarios={s.id: s for s in scenarios},
        rules={r.id: r for r in rules},
        techniques={t.id: t for t in techniques},
        impacts={i.id: i for i in impacts},
        attack_actions={a.id: a for a in actions},
        treatments={t.id: t for t in treatments},
        scales=scales or default_scales(),
    )


_MINIMAL_KB_DOC = {
    "kb_version": "test",
    "standards": [{"id": "STD", "title": "A standard", "version": "1"}],
    "traits": [
        {"id": "trait_a", "description": "trait a", "kind": "compose_setting"},
        {"id": "trait_b", "description": "trait b", "kind": "compose_setting"},
    ],
    "assumptions": [
        {
            "id": "AS_1",
            "category": "Runtime",
            "description": "assumption one",
            "standards": [{"standard": "STD", "section": "1.1"}],
            "verification": {
                "satisfied_when": {"all_of": ["trait_a"]},
                "dissatisfied_when": {"none_of": ["trait_a"]},
            },
        },
        {"id": "AS_2", "category": "Network", "description": "assumption two"},
    ],
    "scenarios": [
        {
            "id": "scenario_one",
            "description": "only scenario",
            "components": ["app"],
            "states": {"AS_1": "Satisfied", "AS_2": "Dissatisfied"},
        }
    ],
    "rules": [
        {"id": "rule_exploit", "kind": "Exploitability", "weights": {"AS_1": 2}},
        {"id": "rule_expose", "kind": "Exposure", "weights": {"AS_2": 1}},
    ],
    "techniques": [
        {
            "id": "tech_one",
            "name": "A technique",
            "attack_technique_ref": "T0000",
            "required_traits": ["trait_a"],
            "exploitability_rule": "rule_exploit",
            "exposure_rule": "rule_expose",
        }
    ],
    "impacts": [{"id": "impact_one", "description": "an impact", "rating": "Moderate"}],
    "attack_actions": [
        {
            "id": "action_one",
            "technique": "tech_one",
            "scenario": "scenario_one",
            "impacts": ["impact_one"],
            "affected_component": "app",
        }
    ],
    "treatments": [
        {
            "id": "treat_one",
            "description": "a treatment",
            "addresses": ["AS_1"],
            "guidelines": ["somewhere"],
            "implementing_traits": ["trait_a"],
        }
    ],
    "scales": {
        "likelihood": ["Unlikely", "Possible", "Likely"],
        "impact": ["Minor", "Moderate", "Disastrous"],
        "risk": ["Low", "Moderate", "Major"],
    },
    "likelihood_matrix": {
        "High": {"High": "Likely", "Medium": "Likely", "Low": "Possible"},
        "Medium": {"High": "Likely", "Medium": "Possible", "Low": "Unlikely"},
        "Low": {"High": "Possible", "Medium": "Unlikely", "Low": "Unlikely"},
    },
    "risk_matrix": {
        "Unlikely": {"Minor": "Low", "Moderate": "Low", "Disastrous": "Moderate"},
        "Possible": {"Minor": "Low", "Moderate": "Moderate", "Disastrous": "Major"},
        "Likely": {"Minor": "Moderate", "Moderate": "Major", "Disastrous": "Major"},
    },
}


def minimal_kb_doc() -> dict:
    """Fresh copy of a small, fully valid KB document (as a dict)."""
    return copy.deepcopy(_MINIMAL_KB_DOC)


@pytest.fixture(scope="session")
def reference_kb():
    return load_reference_kb()


@pytest.fixture()
def running_example_compose() -> str:
    return (FIXTURES / "compose" / "running_example.yml").read_text()


@pytest.fixture()
def mixed_overrides() -> str:
    return (FIXTURES / "overrides" / "mixed_scenario.yml").read_text()
