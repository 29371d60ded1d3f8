"""Domain types for cards and requirements, plus the embedded requirement catalog."""

from __future__ import annotations

import json
import re
from collections.abc import Iterator, Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from cardwright.conditions import (
    Condition,
    ConditionSyntaxError,
    is_trivial,
    parse_condition,
)


class CatalogCorrupt(Exception):
    """The catalog document violates its own invariants."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = problems
        super().__init__("catalog self-check failed:\n  " + "\n  ".join(problems))


class CardKind(str, Enum):
    USE_CASE = "UseCase"
    DATA = "Data"
    MODEL = "Model"
    OPERATION = "Operation"

    @property
    def prefix(self) -> str:
        return _CARD_PREFIX[self]

    @property
    def title(self) -> str:
        return _CARD_TITLE[self]

    @property
    def filename(self) -> str:
        return _CARD_FILE[self]

    @classmethod
    def from_prefix(cls, prefix: str) -> CardKind:
        for kind, p in _CARD_PREFIX.items():
            if p == prefix:
                return kind
        raise ValueError(f"unknown card prefix {prefix!r}")


_CARD_PREFIX = {
    CardKind.USE_CASE: "UC",
    CardKind.DATA: "DC",
    CardKind.MODEL: "MC",
    CardKind.OPERATION: "OC",
}
_CARD_TITLE = {
    CardKind.USE_CASE: "Use Case Card",
    CardKind.DATA: "Data Card",
    CardKind.MODEL: "Model Card",
    CardKind.OPERATION: "Operation Card",
}
_CARD_FILE = {
    CardKind.USE_CASE: "use_case.json",
    CardKind.DATA: "data.json",
    CardKind.MODEL: "model.json",
    CardKind.OPERATION: "operation.json",
}

CARD_ORDER: tuple[CardKind, ...] = tuple(CardKind)


class RiskDimension(str, Enum):
    HUMAN_AGENCY_OVERSIGHT = "HumanAgencyOversight"
    TECHNICAL_ROBUSTNESS_SAFETY = "TechnicalRobustnessSafety"
    PRIVACY_DATA_GOVERNANCE = "PrivacyDataGovernance"
    TRANSPARENCY = "Transparency"
    FAIRNESS = "Fairness"
    SOCIETAL_ENVIRONMENTAL_WELLBEING = "SocietalEnvironmentalWellbeing"
    ACCOUNTABILITY = "Accountability"

    @property
    def step(self) -> str:
        """The Use Case Card step that assesses this dimension."""
        return _DIMENSION_STEP[self]


_DIMENSION_STEP = {
    RiskDimension.HUMAN_AGENCY_OVERSIGHT: "Human agency and oversight",
    RiskDimension.TECHNICAL_ROBUSTNESS_SAFETY: "Technical robustness and safety",
    RiskDimension.PRIVACY_DATA_GOVERNANCE: "Privacy and data governance",
    RiskDimension.TRANSPARENCY: "Transparency",
    RiskDimension.FAIRNESS: "Diversity, non-discrimination and fairness",
    RiskDimension.SOCIETAL_ENVIRONMENTAL_WELLBEING: "Societal and environmental well being",
    RiskDimension.ACCOUNTABILITY: "Accountability",
}


class RiskTier(str, Enum):
    PROHIBITED = "Prohibited"
    HIGH_RISK = "HighRisk"
    MINIMAL = "Minimal"

    @property
    def rank(self) -> int:
        return {RiskTier.MINIMAL: 0, RiskTier.HIGH_RISK: 1, RiskTier.PROHIBITED: 2}[self]


@dataclass(frozen=True)
class RiskClass:
    tier: RiskTier
    transparency_obligations: bool = False

    def __post_init__(self) -> None:
        if self.tier is RiskTier.PROHIBITED and self.transparency_obligations:
            object.__setattr__(self, "transparency_obligations", False)

    def to_dict(self) -> dict:
        return {"class": self.tier.value, "transparency_obligations": self.transparency_obligations}

    @classmethod
    def from_dict(cls, data: Mapping) -> RiskClass:
        extra = set(data) - {"class", "transparency_obligations"}
        if extra:
            raise ValueError(f"unknown risk class keys: {sorted(extra)}")
        if "class" not in data:
            raise ValueError("risk class requires 'class'")
        transparency = data.get("transparency_obligations", False)
        if not isinstance(transparency, bool):
            raise ValueError("transparency_obligations must be a boolean")
        return cls(RiskTier(data["class"]), transparency)


MINIMAL = RiskClass(RiskTier.MINIMAL)
HIGH_RISK = RiskClass(RiskTier.HIGH_RISK)
PROHIBITED = RiskClass(RiskTier.PROHIBITED)


class SeverityBase(str, Enum):
    MANDATORY = "mandatory"
    RECOMMENDED = "recommended"
    INFORMATIONAL = "informational"


class EffectiveSeverity(str, Enum):
    ERROR = "Error"
    WARNING = "Warning"
    INFO = "Info"

    @property
    def rank(self) -> int:
        return {EffectiveSeverity.INFO: 0, EffectiveSeverity.WARNING: 1, EffectiveSeverity.ERROR: 2}[self]


def effective_severity(base: SeverityBase, risk: RiskClass | RiskTier) -> EffectiveSeverity:
    """Mandatory rows only become errors where the Act actually obliges the provider."""
    tier = risk.tier if isinstance(risk, RiskClass) else risk
    if base is SeverityBase.INFORMATIONAL:
        return EffectiveSeverity.INFO
    if base is SeverityBase.RECOMMENDED:
        return EffectiveSeverity.WARNING
    if tier is RiskTier.MINIMAL:
        return EffectiveSeverity.WARNING
    return EffectiveSeverity.ERROR


@dataclass(frozen=True)
class ContextFlags:
    uses_personal_data: bool = False
    uses_biometric_data: bool = False
    uses_copyrighted_data: bool = False
    is_foundation_model: bool = False
    is_gpai: bool = False
    fairness_risk: bool = False
    manual_labeling: bool = False
    third_party_labeling: bool = False
    sensitive_business_data: bool = False
    interacts_with_humans: bool = False
    safety_component: bool = False
    data_poisoning_relevant: bool = False

    def as_dict(self) -> dict[str, bool]:
        return asdict(self)

    def with_flags(self, **changes: bool) -> ContextFlags:
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Mapping) -> ContextFlags:
        """Strict: every flag present, booleans only, nothing else."""
        missing = [n for n in FLAG_NAMES if n not in data]
        unknown = sorted(set(data) - set(FLAG_NAMES))
        if missing:
            raise ValueError(f"missing flags: {missing}")
        if unknown:
            raise ValueError(f"unknown flags: {unknown}")
        bad = [n for n in FLAG_NAMES if not isinstance(data[n], bool)]
        if bad:
            raise ValueError(f"flags must be booleans: {bad}")
        return cls(**{n: data[n] for n in FLAG_NAMES})


FLAG_NAMES: tuple[str, ...] = tuple(f.name for f in fields(ContextFlags))


_REF_HEAD = re.compile(r"(Art\.?|Annex|Recital)\s*([0-9]+|[IVXLC]+\b)\s*(.*)$", re.S)
_REF_START = re.compile(r"(?:Art\.?|Annex|Recital)(?=\s*(?:[0-9]|[IVXLC]+\b))")
_ARTICLE_LIST = re.compile(r"^,\s*\d+(?:\s*,\s*\d+)*$")


@dataclass(frozen=True, order=True)
class AiActRef:
    """One AI-Act anchor in normalized form, e.g. ``Art. 10 (2) b)`` or ``Annex III``."""

    article: str

    def __post_init__(self) -> None:
        if not self.article or _normalize_one(self.article) != self.article:
            raise ValueError(f"not a normalized AI Act reference: {self.article!r}")

    @classmethod
    def parse(cls, raw: str) -> AiActRef:
        return cls(_normalize_one(raw))

    @property
    def kind(self) -> str:
        return self.article.split(" ", 1)[0]

    @property
    def number(self) -> str:
        return self.article.split(" ")[1]

    def __str__(self) -> str:
        return self.article


def _normalize_one(raw: str) -> str:
    text = " ".join(raw.split()).rstrip(",; ")
    m = _REF_HEAD.fullmatch(text)
    if m is None:
        raise ValueError(f"unrecognized AI Act reference: {raw!r}")
    kind, number, detail = m.groups()
    kind = "Art." if kind.startswith("Art") else kind
    detail = detail.strip()
    return f"{kind} {number} {detail}" if detail else f"{kind} {number}"


def parse_ref_cell(cell: str) -> list[AiActRef]:
    """Split a free-form reference cell such as ``Art. 10 (2) b)  Annex III c)``."""
    text = " ".join(cell.split())
    starts = [m.start() for m in _REF_START.finditer(text)]
    if not text:
        return []
    if not starts or text[: starts[0]].strip(" ,;"):
        raise ValueError(f"unrecognized AI Act reference cell: {cell!r}")
    refs: list[AiActRef] = []
    for begin, end in zip(starts, starts[1:] + [len(text)]):
        segment = text[begin:end].strip(" ,;")
        m = _REF_HEAD.fullmatch(segment)
        if m and m.group(1).startswith("Art") and _ARTICLE_LIST.match(m.group(3)):
            numbers = [m.group(2)] + [n.strip() for n in m.group(3).strip(", ").split(",")]
            refs.extend(AiActRef(f"Art. {n}") for n in numbers)
        else:
            refs.append(AiActRef.parse(segment))
    return refs


_ID_PATTERN = re.compile(r"^(UC|DC|MC|OC)-([A-Z]+)-(\d{2})$")


@dataclass(frozen=True)
class RequirementSpec:
    id: str
    card: CardKind
    step: str
    text: str
    ai_act_refs: tuple[AiActRef, ...]
    references: tuple[str, ...]
    severity: SeverityBase
    condition: Condition

    def applies(self, flags: ContextFlags | Mapping[str, bool]) -> bool:
        assignment = flags.as_dict() if isinstance(flags, ContextFlags) else flags
        return self.condition.evaluate(assignment)

    @property
    def is_conditional(self) -> bool:
        return not is_trivial(self.condition)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "card": self.card.value,
            "step": self.step,
            "text": self.text,
            "ai_act_refs": [str(r) for r in self.ai_act_refs],
            "references": list(self.references),
            "severity": self.severity.value,
            "condition": str(self.condition),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> RequirementSpec:
        return cls(
            id=data["id"],
            card=CardKind(data["card"]),
            step=data["step"],
            text=data["text"],
            ai_act_refs=tuple(AiActRef(r) for r in data["ai_act_refs"]),
            references=tuple(data["references"]),
            severity=SeverityBase(data["severity"]),
            condition=parse_condition(data["condition"], FLAG_NAMES),
        )


# Rows hedged with "If feasible" or "Maybe" depend on a judgment call rather than a
# checkable context fact. They stay unconditional and are never mandatory.
JUDGMENT_PREFIXES = ("If feasible", "Maybe")


@dataclass(frozen=True)
class Catalog:
    version: str
    row_counts: Mapping[CardKind, int]
    entries: tuple[RequirementSpec, ...]
    _index: Mapping[str, RequirementSpec] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {e.id: e for e in self.entries})

    def __iter__(self) -> Iterator[RequirementSpec]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, req_id: object) -> bool:
        return req_id in self._index

    def get(self, req_id: str) -> RequirementSpec:
        return self._index[req_id]

    def for_card(self, card: CardKind) -> list[RequirementSpec]:
        return [e for e in self.entries if e.card is card]

    def position(self, req_id: str) -> int:
        return self.entries.index(self._index[req_id])

    def self_check(self) -> list[str]:
        problems: list[str] = []
        seen: set[str] = set()
        for e in self.entries:
            m = _ID_PATTERN.match(e.id)
            if m is None:
                problems.append(f"{e.id}: id does not match {{CARD}}-{{STEP}}-{{NN}}")
            elif CardKind.from_prefix(m.group(1)) is not e.card:
                problems.append(f"{e.id}: prefix disagrees with card {e.card.value}")
            if e.id in seen:
                problems.append(f"{e.id}: duplicate id")
            seen.add(e.id)
            if not e.text.strip():
                problems.append(f"{e.id}: empty requirement text")
            if e.text.startswith("Recommendation:") and e.severity is not SeverityBase.RECOMMENDED:
                problems.append(f"{e.id}: 'Recommendation:' row must be recommended")
            if e.text.startswith(JUDGMENT_PREFIXES):
                if e.severity is SeverityBase.MANDATORY:
                    problems.append(f"{e.id}: judgment-qualified row cannot be mandatory")
            elif e.text.startswith("If ") and not e.is_conditional:
                problems.append(f"{e.id}: 'If ...' row needs a non-trivial condition")
            unknown = e.condition.flags() - set(FLAG_NAMES)
            if unknown:
                problems.append(f"{e.id}: condition references undeclared flags {sorted(unknown)}")
        for kind in CardKind:
            actual = sum(1 for e in self.entries if e.card is kind)
            expected = self.row_counts.get(kind)
            if expected != actual:
                problems.append(f"{kind.value}: manifest records {expected} rows, catalog has {actual}")
        uc_steps = {e.step for e in self.entries if e.card is CardKind.USE_CASE}
        for dim in RiskDimension:
            if dim.step not in uc_steps:
                problems.append(f"risk dimension {dim.value} has no Use Case Card step")
        return problems

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "row_counts": {k.value: self.row_counts[k] for k in CARD_ORDER if k in self.row_counts},
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> Catalog:
        try:
            catalog = cls(
                version=data["version"],
                row_counts={CardKind(k): int(v) for k, v in data["row_counts"].items()},
                entries=tuple(RequirementSpec.from_dict(e) for e in data["entries"]),
            )
        except (KeyError, TypeError, ValueError, ConditionSyntaxError) as exc:
            raise CatalogCorrupt([f"unreadable catalog document: {exc}"]) from exc
        problems = catalog.self_check()
        if problems:
            raise CatalogCorrupt(problems)
        return catalog

    @classmethod
    def from_json(cls, text: str) -> Catalog:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CatalogCorrupt([f"catalog is not valid JSON: {exc}"]) from exc
        return cls.from_dict(data)


@lru_cache(maxsize=1)
def _embedded() -> Catalog:
    text = resources.files("cardwright").joinpath("data/catalog.json").read_text(encoding="utf-8")
    return Catalog.from_json(text)


def load_catalog(path: str | Path | None = None) -> Catalog:
    """Load the embedded catalog (self-checked once, then shared) or an exported copy."""
    if path is None:
        return _embedded()
    return Catalog.from_json(Path(path).read_text(encoding="utf-8"))


def export_catalog(catalog: Catalog | None = None) -> str:
    return (catalog or load_catalog()).to_json()


def requirements_for(
    card: CardKind,
    risk: RiskClass | RiskTier,
    flags: ContextFlags,
    catalog: Catalog | None = None,
) -> list[tuple[RequirementSpec, EffectiveSeverity]]:
    catalog = catalog or load_catalog()
    assignment = flags.as_dict()
    return [
        (req, effective_severity(req.severity, risk))
        for req in catalog.for_card(card)
        if req.condition.evaluate(assignment)
    ]
