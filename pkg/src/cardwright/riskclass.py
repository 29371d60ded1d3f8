"""AI-Act risk-tier classification for a use case."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, fields
from enum import Enum

from cardwright.schema import AiActRef, RiskClass, RiskTier

# Bump when the Act's Annex III list changes; the domain enum below is that list.
ANNEX_III_VERSION = "2023-06"


class DomainTag(str, Enum):
    BIOMETRIC_IDENTIFICATION = "BiometricIdentification"
    CRITICAL_INFRASTRUCTURE = "CriticalInfrastructure"
    EDUCATION = "Education"
    EMPLOYMENT_WORKERS_MANAGEMENT = "EmploymentWorkersManagement"
    ESSENTIAL_SERVICES = "EssentialServices"
    LAW_ENFORCEMENT = "LawEnforcement"
    MIGRATION_ASYLUM = "MigrationAsylum"
    DEMOCRATIC_PROCESSES = "DemocraticProcesses"
    NONE = "None"

    @property
    def label(self) -> str:
        return _DOMAIN_LABEL[self]


_DOMAIN_LABEL = {
    DomainTag.BIOMETRIC_IDENTIFICATION: "biometric identification",
    DomainTag.CRITICAL_INFRASTRUCTURE: "operation of critical infrastructure",
    DomainTag.EDUCATION: "education",
    DomainTag.EMPLOYMENT_WORKERS_MANAGEMENT: "employment & workers management",
    DomainTag.ESSENTIAL_SERVICES: "essential private & public services",
    DomainTag.LAW_ENFORCEMENT: "law enforcement",
    DomainTag.MIGRATION_ASYLUM: "migration & asylum",
    DomainTag.DEMOCRATIC_PROCESSES: "administration of democratic processes",
    DomainTag.NONE: "no listed domain",
}

ANNEX_III_DOMAINS: tuple[DomainTag, ...] = tuple(t for t in DomainTag if t is not DomainTag.NONE)

ART_5_GROUPS = AiActRef("Art. 5 (1) b)")
ART_5_SCORING = AiActRef("Art. 5 (1) c)")
ANNEX_III = AiActRef("Annex III")
ART_6_SAFETY = AiActRef("Art. 6 (1)")
ART_6 = AiActRef("Art. 6")
ART_28B = AiActRef("Art. 28 b)")
ART_52 = AiActRef("Art. 52")

_BOOL_FIELDS = (
    "manipulation_of_groups",
    "social_scoring",
    "safety_component",
    "interacts_with_humans",
    "is_foundation_model",
    "is_gpai",
    "gpai_expected_high_risk_use",
)


@dataclass(frozen=True)
class UseCaseAttributes:
    domain_tags: frozenset[DomainTag]
    manipulation_of_groups: bool = False
    social_scoring: bool = False
    safety_component: bool = False
    interacts_with_humans: bool = False
    is_foundation_model: bool = False
    is_gpai: bool = False
    gpai_expected_high_risk_use: bool = False

    def __post_init__(self) -> None:
        tags = frozenset(DomainTag(t) for t in self.domain_tags)
        object.__setattr__(self, "domain_tags", tags)
        if not tags:
            raise ValueError("domain_tags must not be empty; use 'None' explicitly")
        if DomainTag.NONE in tags and len(tags) > 1:
            raise ValueError("domain tag 'None' cannot be combined with listed domains")

    @classmethod
    def from_dict(cls, data: Mapping) -> UseCaseAttributes:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown attribute keys: {unknown}")
        if "domain_tags" not in data:
            raise ValueError("domain_tags is required")
        tags = data["domain_tags"]
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise ValueError("domain_tags must be a list of strings")
        if len(set(tags)) != len(tags):
            raise ValueError("domain_tags contains duplicates")
        for name in _BOOL_FIELDS:
            if name in data and not isinstance(data[name], bool):
                raise ValueError(f"{name} must be a boolean")
        return cls(
            domain_tags=frozenset(DomainTag(t) for t in tags),
            **{name: data[name] for name in _BOOL_FIELDS if name in data},
        )

    def to_dict(self) -> dict:
        out: dict = {"domain_tags": [t.value for t in DomainTag if t in self.domain_tags]}
        out.update({name: getattr(self, name) for name in _BOOL_FIELDS})
        return out

    @property
    def annex_domains(self) -> list[DomainTag]:
        return [t for t in ANNEX_III_DOMAINS if t in self.domain_tags]


@dataclass(frozen=True)
class RiskClassDecision:
    risk_class: RiskClass
    triggers: tuple[AiActRef, ...]
    rationale: str
    # Foundation-model duties are not final in the Act yet.
    provisional_triggers: tuple[AiActRef, ...] = ()

    def __post_init__(self) -> None:
        tier = self.risk_class.tier
        if tier is RiskTier.PROHIBITED and not any(t.number == "5" and t.kind == "Art." for t in self.triggers):
            raise ValueError("a prohibited decision must cite Art. 5")
        if tier is RiskTier.HIGH_RISK and not self.triggers:
            raise ValueError("a high-risk decision needs at least one trigger")

    @property
    def tier(self) -> RiskTier:
        return self.risk_class.tier

    def to_dict(self) -> dict:
        return {
            "risk_class": self.risk_class.to_dict(),
            "triggers": [str(t) for t in self.triggers],
            "provisional_triggers": [str(t) for t in self.provisional_triggers],
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> RiskClassDecision:
        return cls(
            risk_class=RiskClass.from_dict(data["risk_class"]),
            triggers=tuple(AiActRef(t) for t in data["triggers"]),
            rationale=data["rationale"],
            provisional_triggers=tuple(AiActRef(t) for t in data.get("provisional_triggers", ())),
        )


def _join(items: Iterable[str]) -> str:
    items = list(items)
    if len(items) <= 1:
        return "".join(items)
    return ", ".join(items[:-1]) + " and " + items[-1]


def classify(attrs: UseCaseAttributes, provider_assessment: str | None = None) -> RiskClassDecision:
    """Assign the tier by rule precedence: prohibited practice, then high-risk triggers, then minimal.

    ``provider_assessment`` is the provider's own self-assessment text; it is quoted
    in the rationale, never interpreted.
    """
    triggers: list[AiActRef] = []
    sentences: list[str] = []

    if attrs.manipulation_of_groups or attrs.social_scoring:
        practices = []
        if attrs.manipulation_of_groups:
            triggers.append(ART_5_GROUPS)
            practices.append(f"manipulation of groups of people ({ART_5_GROUPS})")
        if attrs.social_scoring:
            triggers.append(ART_5_SCORING)
            practices.append(f"social scoring ({ART_5_SCORING})")
        risk = RiskClass(RiskTier.PROHIBITED)
        sentences.append(f"Prohibited: the use case involves {_join(practices)}, a forbidden practice.")
    else:
        reasons = []
        domains = attrs.annex_domains
        if domains:
            triggers.append(ANNEX_III)
            reasons.append(f"it falls in the {ANNEX_III} domain(s) {_join(d.label for d in domains)}")
        if attrs.safety_component:
            triggers.append(ART_6_SAFETY)
            reasons.append(f"it is a safety component of a product ({ART_6_SAFETY})")
        if attrs.is_gpai and attrs.gpai_expected_high_risk_use:
            triggers.append(ART_6)
            reasons.append("it is a general purpose AI system expected to be used in high-risk scenarios")
        if reasons:
            risk = RiskClass(RiskTier.HIGH_RISK)
            sentences.append(
                f"High risk: {_join(reasons)}; the obligations of Articles 9 to 15 apply."
            )
        else:
            risk = RiskClass(RiskTier.MINIMAL, attrs.interacts_with_humans)
            sentences.append(
                "Minimal risk: no prohibited practice, no Annex III domain, no safety component"
                " and no expected high-risk general purpose use; there are no mandatory obligations."
            )
            if attrs.interacts_with_humans:
                triggers.append(ART_52)
                sentences.append(
                    f"Transparency obligation ({ART_52}): end users must be informed that they are"
                    " interacting with an AI system."
                )

    provisional: tuple[AiActRef, ...] = ()
    if attrs.is_foundation_model:
        triggers.append(ART_28B)
        provisional = (ART_28B,)
        sentences.append(f"Foundation model obligations ({ART_28B}, provisional) apply in addition.")
    if provider_assessment and provider_assessment.strip():
        sentences.append(f"Provider assessment: {' '.join(provider_assessment.split())}")

    return RiskClassDecision(risk, tuple(triggers), " ".join(sentences), provisional)


EXIT_CODES = {RiskTier.MINIMAL: 0, RiskTier.HIGH_RISK: 20, RiskTier.PROHIBITED: 30}
