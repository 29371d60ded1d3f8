"""Validation engine: per-requirement completeness, cross-card consistency and scoring."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from cardwright.ingest import CardBundle, CardDoc, KpiSpec, ResponseStatus
from cardwright.riskclass import DomainTag, RiskClassDecision, UseCaseAttributes, classify
from cardwright.schema import (
    CARD_ORDER,
    Catalog,
    CardKind,
    EffectiveSeverity,
    RequirementSpec,
    RiskTier,
    SeverityBase,
    load_catalog,
    requirements_for,
)

CROSS_CHECKS: dict[str, str] = {
    "XC-00": "prohibited practice",
    "XC-01": "fairness risk without sensitive attributes",
    "XC-02": "foundation model documentation",
    "XC-03": "KPI coherence across manifest, use case and model",
    "XC-04": "personal data without informed individuals",
    "XC-05": "monitoring does not cover the documented model",
    "XC-06": "declared risk class differs from classification",
}


@dataclass(frozen=True)
class Finding:
    code: str
    severity: EffectiveSeverity
    message: str
    location: str

    def __post_init__(self) -> None:
        if not self.message.strip():
            raise ValueError("a finding needs a message")

    @property
    def card(self) -> CardKind | None:
        head = self.location.split("/", 1)[0]
        try:
            return CardKind(head)
        except ValueError:
            return None

    def to_dict(self) -> dict:
        return {"code": self.code, "severity": self.severity.value, "message": self.message, "location": self.location}

    @classmethod
    def from_dict(cls, data: Mapping) -> Finding:
        return cls(data["code"], EffectiveSeverity(data["severity"]), data["message"], data["location"])


@dataclass(frozen=True)
class CompletenessScore:
    answered: int
    applicable: int

    def __post_init__(self) -> None:
        if not 0 <= self.answered <= self.applicable:
            raise ValueError("need 0 <= answered <= applicable")

    @property
    def value(self) -> float:
        return self.answered / self.applicable if self.applicable else 1.0

    def __add__(self, other: CompletenessScore) -> CompletenessScore:
        return CompletenessScore(self.answered + other.answered, self.applicable + other.applicable)

    def to_dict(self) -> dict:
        return {"answered": self.answered, "applicable": self.applicable, "value": self.value}

    @classmethod
    def from_dict(cls, data: Mapping) -> CompletenessScore:
        score = cls(data["answered"], data["applicable"])
        if "value" in data and data["value"] != score.value:
            raise ValueError("score value inconsistent with counts")
        return score


@dataclass(frozen=True)
class FindingReport:
    findings: tuple[Finding, ...]
    per_card_scores: Mapping[CardKind, CompletenessScore]
    overall: CompletenessScore
    risk_decision: RiskClassDecision
    catalog_version: str = ""
    notes: tuple[str, ...] = field(default=())

    def count(self, severity: EffectiveSeverity) -> int:
        return sum(1 for f in self.findings if f.severity is severity)

    @property
    def has_errors(self) -> bool:
        return self.count(EffectiveSeverity.ERROR) > 0

    def to_dict(self) -> dict:
        return {
            "catalog_version": self.catalog_version,
            "risk_decision": self.risk_decision.to_dict(),
            "overall": self.overall.to_dict(),
            "per_card_scores": {k.value: self.per_card_scores[k].to_dict() for k in CARD_ORDER},
            "findings": [f.to_dict() for f in self.findings],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> FindingReport:
        return cls(
            findings=tuple(Finding.from_dict(f) for f in data["findings"]),
            per_card_scores={CardKind(k): CompletenessScore.from_dict(v) for k, v in data["per_card_scores"].items()},
            overall=CompletenessScore.from_dict(data["overall"]),
            risk_decision=RiskClassDecision.from_dict(data["risk_decision"]),
            catalog_version=data.get("catalog_version", ""),
            notes=tuple(data.get("notes", ())),
        )

    @classmethod
    def from_json(cls, text: str) -> FindingReport:
        return cls.from_dict(json.loads(text))


REPORT_NOTES = (
    "Recommended rows count toward the applicable total and are reported at Warning severity.",
    "A NotApplicable response with a justification counts as answered.",
    "Severity follows the classified risk class, not the declared one.",
)


def attributes_for_bundle(bundle: CardBundle) -> tuple[UseCaseAttributes, str | None]:
    """Classifier input: the use case's structured attributes OR-ed with the manifest flags."""
    flags = bundle.manifest.flags
    resp = bundle.use_case.get("UC-RISK-01")
    attrs = bundle.use_case.structured("UC-RISK-01", "attributes")
    if attrs is None:
        attrs = UseCaseAttributes(domain_tags=frozenset({DomainTag.NONE}))
    merged = UseCaseAttributes(
        domain_tags=attrs.domain_tags,
        manipulation_of_groups=attrs.manipulation_of_groups,
        social_scoring=attrs.social_scoring,
        safety_component=attrs.safety_component or flags.safety_component,
        interacts_with_humans=attrs.interacts_with_humans or flags.interacts_with_humans,
        is_foundation_model=attrs.is_foundation_model or flags.is_foundation_model,
        is_gpai=attrs.is_gpai or flags.is_gpai,
        gpai_expected_high_risk_use=attrs.gpai_expected_high_risk_use,
    )
    note = resp.body if resp is not None and resp.status is ResponseStatus.ADDRESSED else None
    return merged, note


def classify_bundle(bundle: CardBundle) -> RiskClassDecision:
    attrs, note = attributes_for_bundle(bundle)
    return classify(attrs, note)


def completeness_score(applicable: Iterable[RequirementSpec], card: CardDoc) -> CompletenessScore:
    reqs = list(applicable)
    answered = 0
    for req in reqs:
        resp = card.get(req.id)
        if resp is not None and resp.answered:
            answered += 1
    return CompletenessScore(answered, len(reqs))


def _requirement_findings(
    bundle: CardBundle, card: CardDoc, applicable: list[tuple[RequirementSpec, EffectiveSeverity]]
) -> list[Finding]:
    findings = []
    deferred = bundle.manifest.deferred.get(card.kind)
    for req, severity in applicable:
        where = f"{card.kind.value}/{req.id}"
        resp = card.get(req.id)
        if resp is None:
            if deferred:
                message = f"Card deferred ({deferred}); not yet addressed: {req.text}"
            else:
                message = f"Missing response: {req.text}"
            findings.append(Finding(req.id, severity, message, where))
        elif resp.status is ResponseStatus.TODO:
            findings.append(Finding(req.id, severity, f"Marked Todo: {req.text}", where))
        elif (
            resp.status is ResponseStatus.NOT_APPLICABLE
            and req.severity is SeverityBase.MANDATORY
            and not req.is_conditional
        ):
            findings.append(
                Finding(req.id, EffectiveSeverity.WARNING, f"Marked not applicable: {resp.justification}", where)
            )
    return findings


def _kpi_label(kpi: KpiSpec) -> str:
    op = ">=" if kpi.direction.value == "AtLeast" else "<="
    unit = f" {kpi.unit}" if kpi.unit else ""
    return f"{kpi.metric} {op} {kpi.threshold:g}{unit}"


def _check_fairness(bundle: CardBundle) -> list[Finding]:
    if not bundle.manifest.flags.fairness_risk:
        return []
    attributes = bundle.data.structured("DC-COLL-10", "sensitive_attributes")
    if attributes:
        return []
    return [
        Finding(
            "XC-01",
            EffectiveSeverity.ERROR,
            "fairness_risk is declared but the Data Card lists no sensitive attributes "
            "(If fairness is identified as a risk, list sensitive attributes)",
            "Data/DC-COLL-10",
        )
    ]


def _check_foundation_model(bundle: CardBundle) -> list[Finding]:
    flags = bundle.manifest.flags
    findings = []
    for key, flag in (("uses_foundation_model", "is_foundation_model"), ("uses_gpai", "is_gpai")):
        stated = bundle.use_case.structured("UC-SOL-04", key)
        if stated is not None and stated != getattr(flags, flag):
            findings.append(
                Finding(
                    "XC-02",
                    EffectiveSeverity.ERROR,
                    f"Use Case Card states {key}={str(stated).lower()} but manifest flag {flag} "
                    f"is {str(getattr(flags, flag)).lower()}",
                    "UseCase/UC-SOL-04",
                )
            )
    if flags.is_foundation_model:
        resp = bundle.model.get("MC-DESC-04")
        if resp is None or resp.status is not ResponseStatus.ADDRESSED:
            findings.append(
                Finding(
                    "XC-02",
                    EffectiveSeverity.ERROR,
                    "a foundation model is declared but the Model Card does not document "
                    "the steps taken to reduce energy consumption",
                    "Model/MC-DESC-04",
                )
            )
    return findings


def _check_kpis(bundle: CardBundle) -> list[Finding]:
    manifest = {k.metric: k for k in bundle.manifest.kpis}
    use_case = {k.metric: k for k in bundle.use_case.structured("UC-SOL-03", "kpis") or ()}
    model = {k.metric: k for k in bundle.model.structured("MC-MET-02", "kpis") or ()}
    findings = []
    for metric in sorted(manifest.keys() & use_case.keys()):
        if manifest[metric] != use_case[metric]:
            findings.append(
                Finding(
                    "XC-03",
                    EffectiveSeverity.ERROR,
                    f"go-live KPI {metric!r} differs: manifest {_kpi_label(manifest[metric])}, "
                    f"Use Case Card {_kpi_label(use_case[metric])}",
                    "UseCase/UC-SOL-03",
                )
            )
    for source, targets in (("manifest", manifest), ("Use Case Card", use_case)):
        for metric in sorted(model.keys() & targets.keys()):
            if model[metric].weaker_than(targets[metric]):
                findings.append(
                    Finding(
                        "XC-03",
                        EffectiveSeverity.ERROR,
                        f"Model Card minimum for {metric!r} ({_kpi_label(model[metric])}) does not meet "
                        f"the {source} KPI ({_kpi_label(targets[metric])})",
                        "Model/MC-MET-02",
                    )
                )
    return findings


def _check_personal_data(bundle: CardBundle) -> list[Finding]:
    if not bundle.manifest.flags.uses_personal_data:
        return []
    if bundle.data.structured("DC-COLL-08", "individuals_informed") is True:
        return []
    return [
        Finding(
            "XC-04",
            EffectiveSeverity.ERROR,
            "uses_personal_data is declared but the Data Card does not confirm that all "
            "individuals know they are part of the data",
            "Data/DC-COLL-08",
        )
    ]


def _check_monitoring(bundle: CardBundle) -> list[Finding]:
    name = bundle.model.structured("MC-DESC-01", "model_name")
    monitored = bundle.operation.structured("OC-SCOPE-01", "monitored_components")
    if name is None or monitored is None or name in monitored:
        return []
    return [
        Finding(
            "XC-05",
            EffectiveSeverity.WARNING,
            f"monitored components do not include the model {name!r} named in the Model Card",
            "Operation/OC-SCOPE-01",
        )
    ]


def _check_declared_risk(bundle: CardBundle, decision: RiskClassDecision) -> list[Finding]:
    declared = bundle.manifest.declared_risk_class
    if declared == decision.risk_class:
        return []

    def label(rc) -> str:
        return rc.tier.value + (" with transparency obligations" if rc.transparency_obligations else "")

    return [
        Finding(
            "XC-06",
            EffectiveSeverity.WARNING,
            f"declared risk class {label(declared)} differs from classified {label(decision.risk_class)}",
            "manifest/declared_risk_class",
        )
    ]


def cross_card_checks(bundle: CardBundle, decision: RiskClassDecision | None = None) -> list[Finding]:
    """XC-01..XC-06, each independent; ordered by check id."""
    decision = decision or classify_bundle(bundle)
    return [
        *_check_fairness(bundle),
        *_check_foundation_model(bundle),
        *_check_kpis(bundle),
        *_check_personal_data(bundle),
        *_check_monitoring(bundle),
        *_check_declared_risk(bundle, decision),
    ]


def validate_bundle(bundle: CardBundle, catalog: Catalog | None = None) -> FindingReport:
    catalog = catalog or load_catalog()
    decision = classify_bundle(bundle)
    flags = bundle.manifest.flags

    findings: list[Finding] = []
    scores: dict[CardKind, CompletenessScore] = {}
    for kind in CARD_ORDER:
        card = bundle.card(kind)
        applicable = requirements_for(kind, decision.risk_class, flags, catalog)
        scores[kind] = completeness_score((req for req, _ in applicable), card)
        findings.extend(_requirement_findings(bundle, card, applicable))

    if decision.tier is RiskTier.PROHIBITED:
        triggers = ", ".join(str(t) for t in decision.triggers)
        findings = [
            Finding(
                "XC-00",
                EffectiveSeverity.ERROR,
                f"the use case is a prohibited practice ({triggers}); no documentation can make it compliant",
                "UseCase/UC-RISK-01",
            )
        ]
    else:
        findings.extend(cross_card_checks(bundle, decision))

    overall = CompletenessScore(0, 0)
    for score in scores.values():
        overall = overall + score
    return FindingReport(
        findings=tuple(findings),
        per_card_scores=scores,
        overall=overall,
        risk_decision=decision,
        catalog_version=catalog.version,
        notes=REPORT_NOTES,
    )
