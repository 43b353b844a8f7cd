"""Deterministic, knowledge-base driven security risk identification for
container deployments.

The package turns a declarative knowledge base (traits, assumptions,
scenarios, weighted calculation rules, matrices, treatments) plus a
container's deployment artefacts into a structured risk factsheet.
"""

from __future__ import annotations

from importlib import resources

__version__ = "0.1.0"

from .context import (  # noqa: E402
    AssumptionStateMap,
    Provenance,
    ScenarioFit,
    ScenarioFitReport,
    StateEntry,
    derive_states,
    effective_states,
    select_scenario,
)
from .errors import (  # noqa: E402
    ComposeParseError,
    CsroIdentError,
    InputError,
    KBError,
    KBLoadError,
    LintReportError,
    OverridesError,
)
from .factsheet import (  # noqa: E402
    AnalyzeOptions,
    Factsheet,
    ServiceSection,
    analyze,
    exit_policy,
    factsheet_to_jsonable,
    render,
)
from .ingest import (  # noqa: E402
    AssumptionOverride,
    Evidence,
    LintFinding,
    ObservedTraits,
    extract_traits,
    ingest_lint_report,
    load_assumption_overrides,
    merge_observed,
    parse_compose,
    parse_lint_report,
)
from .kb import (  # noqa: E402
    ValidationIssue,
    ValidationReport,
    dump_kb,
    load_kb,
    validate_kb,
)
from .model import (  # noqa: E402
    AttackAction,
    CalculationRule,
    ContainerAttackTechnique,
    ContextScenario,
    Impact,
    KnowledgeBase,
    Rating,
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
from .risk import (  # noqa: E402
    AddressedAssumption,
    Contribution,
    ImpactAssessment,
    RequiredTraitEvidence,
    RiskFinding,
    ScoreBreakdown,
    TechniqueSummary,
    TreatmentRecommendation,
    applicable_actions,
    assess_attack_action,
    likelihood,
    rank_treatments,
    rating_from_score,
    risk_level,
    satisfaction_score,
    security_score,
)


def reference_kb_path() -> str:
    """Filesystem path of the packaged reference knowledge base."""
    return str(resources.files("csro_ident").joinpath("data/reference_kb.yaml"))


def load_reference_kb() -> KnowledgeBase:
    """Load the packaged reference knowledge base."""
    text = (
        resources.files("csro_ident")
        .joinpath("data/reference_kb.yaml")
        .read_text(encoding="utf-8")
    )
    return load_kb(text)


def factsheet_schema_path() -> str:
    """Filesystem path of the factsheet JSON schema."""
    return str(resources.files("csro_ident").joinpath("data/factsheet.schema.json"))
