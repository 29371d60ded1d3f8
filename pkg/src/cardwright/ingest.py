"""Strict parsing of card bundles from disk.

A bundle is a directory holding ``manifest.json`` plus one JSON document per card
(``use_case.json``, ``data.json``, ``model.json``, ``operation.json``). Unknown keys are
errors, never warnings.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from cardwright._jsonpos import index_positions, line_col, locate
from cardwright.riskclass import UseCaseAttributes
from cardwright.schema import (
    CARD_ORDER,
    Catalog,
    CardKind,
    ContextFlags,
    RiskClass,
    load_catalog,
)

MANIFEST_FILE = "manifest.json"


class IngestError(Exception):
    """Base class; ``path``, ``line`` and ``column`` locate the problem when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = path or ""
        if line is not None:
            where += f":{line}:{column}"
        super().__init__(f"{where}: {message}" if where else message)


class MissingManifest(IngestError):
    def __init__(self, root: str):
        super().__init__(f"no {MANIFEST_FILE} in bundle directory", path=root)


class MissingCard(IngestError):
    def __init__(self, path: str, kind: CardKind):
        self.kind = kind
        super().__init__(f"{kind.title} is missing and not deferred in the manifest", path=path)


class MalformedDocument(IngestError):
    def __init__(self, path: str, line: int, column: int, reason: str):
        self.reason = reason
        super().__init__(reason, path=path, line=line, column=column)


class UnknownRequirementId(IngestError):
    def __init__(self, req_id: str, path: str | None = None, line: int | None = None, column: int | None = None):
        self.id = req_id
        super().__init__(f"unknown requirement id {req_id!r}", path, line, column)


class DuplicateKey(IngestError):
    def __init__(self, key: str, path: str | None = None, line: int | None = None, column: int | None = None):
        self.id = key
        super().__init__(f"duplicate key {key!r}", path, line, column)


class KindMismatch(IngestError):
    def __init__(self, req_id: str, card: CardKind, path: str | None = None, line: int | None = None,
                 column: int | None = None):
        self.id = req_id
        self.card = card
        super().__init__(f"requirement {req_id} does not belong to the {card.title}", path, line, column)


class ResponseStatus(str, Enum):
    ADDRESSED = "Addressed"
    NOT_APPLICABLE = "NotApplicable"
    TODO = "Todo"


class Direction(str, Enum):
    AT_LEAST = "AtLeast"
    AT_MOST = "AtMost"


@dataclass(frozen=True)
class KpiSpec:
    metric: str
    threshold: float
    direction: Direction
    unit: str | None = None

    def __post_init__(self) -> None:
        if not self.metric.strip():
            raise ValueError("KPI metric must not be empty")
        if isinstance(self.threshold, bool) or not math.isfinite(self.threshold):
            raise ValueError("KPI threshold must be a finite number")
        if self.unit is None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError("a unitless KPI threshold must lie in [0, 1]")
        if self.unit is not None and (not self.unit.strip() or self.threshold <= 0):
            raise ValueError("a KPI with a unit needs a non-empty unit and a positive threshold")

    def weaker_than(self, other: KpiSpec) -> bool:
        """True if meeting ``self`` does not guarantee meeting ``other`` (same metric)."""
        if self.direction is not other.direction or self.unit != other.unit:
            return True
        if self.direction is Direction.AT_LEAST:
            return self.threshold < other.threshold
        return self.threshold > other.threshold

    def to_dict(self) -> dict:
        out: dict = {"metric": self.metric, "threshold": self.threshold, "direction": self.direction.value}
        if self.unit is not None:
            out["unit"] = self.unit
        return out

    @classmethod
    def from_dict(cls, data: Any) -> KpiSpec:
        if not isinstance(data, dict):
            raise ValueError("a KPI must be an object")
        _reject_unknown(data, {"metric", "threshold", "direction", "unit"})
        for key in ("metric", "threshold", "direction"):
            if key not in data:
                raise ValueError(f"KPI is missing {key!r}")
        if not isinstance(data["metric"], str):
            raise ValueError("KPI metric must be a string")
        threshold = data["threshold"]
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            raise ValueError("KPI threshold must be a number")
        unit = data.get("unit")
        if unit is not None and not isinstance(unit, str):
            raise ValueError("KPI unit must be a string")
        return cls(data["metric"], threshold, Direction(data["direction"]), unit)


@dataclass(frozen=True)
class RequirementResponse:
    status: ResponseStatus
    body: str = ""
    justification: str = ""
    evidence: tuple[str, ...] = ()
    structured: Mapping[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.status is ResponseStatus.ADDRESSED and not self.body.strip():
            raise ValueError("an Addressed response needs a non-empty body")
        if self.status is ResponseStatus.NOT_APPLICABLE and not self.justification.strip():
            raise ValueError("a NotApplicable response needs a justification")
        if self.status is not ResponseStatus.NOT_APPLICABLE and self.justification.strip():
            raise ValueError("a justification is only allowed on NotApplicable responses")

    @property
    def answered(self) -> bool:
        return self.status is ResponseStatus.ADDRESSED or (
            self.status is ResponseStatus.NOT_APPLICABLE and bool(self.justification.strip())
        )

    def to_dict(self) -> dict:
        out: dict = {"status": self.status.value, "body": self.body}
        if self.justification:
            out["justification"] = self.justification
        if self.evidence:
            out["evidence"] = list(self.evidence)
        if self.structured is not None:
            out["structured"] = {k: _dump(v) for k, v in self.structured.items()}
        return out


@dataclass(frozen=True)
class CardDoc:
    kind: CardKind
    responses: Mapping[str, RequirementResponse] = field(default_factory=dict)

    def get(self, req_id: str) -> RequirementResponse | None:
        return self.responses.get(req_id)

    def structured(self, req_id: str, key: str) -> Any:
        resp = self.responses.get(req_id)
        if resp is None or resp.structured is None:
            return None
        return resp.structured.get(key)

    def to_dict(self, catalog: Catalog | None = None) -> dict:
        catalog = catalog or load_catalog()
        ordered = sorted(self.responses, key=catalog.position)
        return {"kind": self.kind.value, "responses": {rid: self.responses[rid].to_dict() for rid in ordered}}


@dataclass(frozen=True)
class Manifest:
    name: str
    version: str
    declared_risk_class: RiskClass
    flags: ContextFlags
    kpis: tuple[KpiSpec, ...]
    contact: str
    deferred: Mapping[CardKind, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {
            "name": self.name,
            "version": self.version,
            "contact": self.contact,
            "declared_risk_class": self.declared_risk_class.to_dict(),
            "flags": self.flags.as_dict(),
            "kpis": [k.to_dict() for k in self.kpis],
        }
        if self.deferred:
            out["deferred"] = {k.value: self.deferred[k] for k in CARD_ORDER if k in self.deferred}
        return out


@dataclass(frozen=True)
class CardBundle:
    manifest: Manifest
    use_case: CardDoc
    data: CardDoc
    model: CardDoc
    operation: CardDoc

    def card(self, kind: CardKind) -> CardDoc:
        return {
            CardKind.USE_CASE: self.use_case,
            CardKind.DATA: self.data,
            CardKind.MODEL: self.model,
            CardKind.OPERATION: self.operation,
        }[kind]

    @property
    def cards(self) -> tuple[CardDoc, ...]:
        return tuple(self.card(k) for k in CARD_ORDER)


# --- structured payloads -------------------------------------------------------

CONTENT_THEMES: tuple[str, ...] = (
    "About the publishers of the dataset and access to them",
    "The funding of the dataset",
    "The access restrictions and policies of the dataset",
    "The wipeout and retention policies of the dataset",
    "The updates, versions, refreshes, additions to the data of the dataset",
    "Detailed breakdowns of features of the dataset",
    "If there are attributes missing from the dataset or the dataset's documentation",
    "The original upstream sources of the data",
    "The nature (data modality, domain, format, etc.) of the dataset",
    "What typical and outlier examples in the dataset look like",
    "Explanations and motivations for creating the dataset",
    "The intended applications of the dataset",
    "The safety of using the dataset in practice (risks, limitations, and trade-offs)",
    "The maintenance status and version of the dataset",
    "Difference across previous and current versions of the dataset",
    "Expectations around using the dataset with other datasets or tables (feature engineering, joining, etc.)",
    "The data collection process (inclusion, exclusion, filtering criteria)",
    "How the data cleaned, parsed, and processed (sampling, filtering, etc.)",
    "How the data was rated in the dataset, its process, description and/or impact",
    "How the data was labelled in the dataset, its process, description and/or impact",
    "How the data was validated in the dataset, its process, description and/or impact",
    "The past usage and associated performance of the dataset (eg. models trained)",
    "Adjudication policies related to the dataset (labeller instructions, inter-rater policies, etc.)",
    "Regulatory or compliance policies associated with the dataset (GDPR, licensing, etc.)",
    "Dataset Infrastructure and/or pipeline implementation",
    "The descriptive statistics of the dataset (mean, standard deviations, etc.)",
    "Any known patterns (correlations, biases, skews) within the dataset",
    "Any socio-cultural, geopolitical, or economic representation of people in the dataset",
    "Fairness-related evaluations and considerations of the dataset",
    "Definitions and explanations for technical terms used in the dataset's documentation "
    "(metrics, industry-specific terms, acronyms)",
    "Domain-specific knowledge required to use the dataset",
)


def _as_bool(value: Any) -> bool:
    if not isinstance(value, bool):
        raise ValueError("expected a boolean")
    return value


def _as_text(value: Any) -> str:
    if not isinstance(value, str) or not value.strip():
        raise ValueError("expected a non-empty string")
    return value


def _as_text_list(value: Any) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) and v.strip() for v in value):
        raise ValueError("expected a list of non-empty strings")
    if len(set(value)) != len(value):
        raise ValueError("list contains duplicates")
    return tuple(value)


def _as_kpis(value: Any) -> tuple[KpiSpec, ...]:
    if not isinstance(value, list):
        raise ValueError("expected a list of KPIs")
    kpis = tuple(KpiSpec.from_dict(v) for v in value)
    metrics = [k.metric for k in kpis]
    if len(set(metrics)) != len(metrics):
        raise ValueError("duplicate KPI metric")
    return kpis


def _as_fractions(value: Any) -> dict[str, float]:
    if not isinstance(value, dict) or not value:
        raise ValueError("expected an object of split name to fraction")
    for name, frac in value.items():
        if isinstance(frac, bool) or not isinstance(frac, (int, float)) or not 0.0 < frac <= 1.0:
            raise ValueError(f"split {name!r} needs a fraction in (0, 1]")
    if abs(sum(value.values()) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    return dict(value)


def _as_themes(value: Any) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) and 1 <= v <= len(CONTENT_THEMES) for v in value
    ):
        raise ValueError(f"expected a list of content theme numbers 1..{len(CONTENT_THEMES)}")
    if len(set(value)) != len(value):
        raise ValueError("content themes contain duplicates")
    return tuple(value)


def _as_attributes(value: Any) -> UseCaseAttributes:
    if not isinstance(value, dict):
        raise ValueError("expected a use case attribute object")
    return UseCaseAttributes.from_dict(value)


Converter = Callable[[Any], Any]

# Typed payloads accepted per requirement; everything else is rejected.
PAYLOADS: dict[str, dict[str, Converter]] = {
    "UC-SOL-03": {"kpis": _as_kpis},
    "UC-SOL-04": {"uses_foundation_model": _as_bool, "uses_gpai": _as_bool},
    "UC-RISK-01": {"attributes": _as_attributes},
    "DC-COLL-08": {"individuals_informed": _as_bool},
    "DC-COLL-10": {"sensitive_attributes": _as_text_list},
    "DC-SPLIT-01": {"splits": _as_fractions},
    "MC-DESC-01": {"model_name": _as_text},
    "MC-MET-02": {"kpis": _as_kpis},
    "OC-SCOPE-01": {"monitored_components": _as_text_list},
}
DATA_CARD_ANNOTATIONS: dict[str, Converter] = {"content_themes": _as_themes}


def payload_fields(req_id: str, kind: CardKind) -> dict[str, Converter]:
    allowed = dict(PAYLOADS.get(req_id, {}))
    if kind is CardKind.DATA:
        allowed.update(DATA_CARD_ANNOTATIONS)
    return allowed


def _dump(value: Any) -> Any:
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, (list, tuple)):
        return [_dump(v) for v in value]
    if isinstance(value, dict):
        return {k: _dump(v) for k, v in value.items()}
    return value


def _reject_unknown(data: Mapping, allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown key(s) {unknown}")


# --- parsing -----------------------------------------------------------------------


class _DuplicateKeyFound(Exception):
    def __init__(self, key: str):
        self.key = key


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict:
    seen: dict[str, Any] = {}
    for key, value in pairs:
        if key in seen:
            raise _DuplicateKeyFound(key)
        seen[key] = value
    return seen


def _reject_constant(name: str) -> Any:
    raise ValueError(f"{name} is not allowed")


class _Source:
    """Decoded JSON text with position lookup for error reporting."""

    def __init__(self, raw: bytes, path: str):
        self.path = path
        try:
            self.text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = raw[: exc.start].decode("utf-8", errors="replace")
            line, col = line_col(prefix + "?", len(prefix))
            raise MalformedDocument(path, line, col, f"invalid UTF-8: {exc.reason}") from exc
        self.text = self.text.removeprefix("\ufeff")
        try:
            self.data = json.loads(self.text, object_pairs_hook=_no_duplicates, parse_constant=_reject_constant)
        except _DuplicateKeyFound as dup:
            line, col = self._second_occurrence(dup.key)
            raise DuplicateKey(dup.key, path, line, col) from None
        except json.JSONDecodeError as exc:
            line, col = line_col(self.text, exc.pos)
            raise MalformedDocument(path, line, col, exc.msg) from exc
        except ValueError as exc:
            raise MalformedDocument(path, 1, 1, str(exc)) from exc
        self.positions = index_positions(self.text)

    def _second_occurrence(self, key: str) -> tuple[int, int]:
        needle = json.dumps(key)
        first = self.text.find(needle)
        second = self.text.find(needle, first + 1) if first >= 0 else -1
        return line_col(self.text, max(second, first, 0))

    def where(self, json_path: tuple) -> tuple[int, int]:
        return locate(self.text, self.positions, json_path)

    def fail(self, json_path: tuple, reason: str) -> MalformedDocument:
        line, col = self.where(json_path)
        return MalformedDocument(self.path, line, col, reason)

    def object_at(self, value: Any, json_path: tuple, required: set[str], optional: set[str] = frozenset()) -> dict:
        if not isinstance(value, dict):
            raise self.fail(json_path, "expected a JSON object")
        unknown = sorted(set(value) - required - optional)
        if unknown:
            raise self.fail(json_path + (unknown[0],), f"unknown key {unknown[0]!r}")
        missing = sorted(required - set(value))
        if missing:
            raise self.fail(json_path, f"missing required key {missing[0]!r}")
        return value


def _parse_response(src: _Source, req_id: str, kind: CardKind, value: Any) -> RequirementResponse:
    at = ("responses", req_id)
    obj = src.object_at(value, at, {"status"}, {"body", "justification", "evidence", "structured"})
    try:
        status = ResponseStatus(obj["status"])
    except ValueError:
        raise src.fail(at + ("status",), f"status must be one of {[s.value for s in ResponseStatus]}") from None
    for key in ("body", "justification"):
        if key in obj and not isinstance(obj[key], str):
            raise src.fail(at + (key,), f"{key} must be a string")
    evidence = obj.get("evidence", [])
    if not isinstance(evidence, list) or not all(isinstance(e, str) and e.strip() for e in evidence):
        raise src.fail(at + ("evidence",), "evidence must be a list of non-empty strings")

    structured = None
    if obj.get("structured") is not None:
        payload = obj["structured"]
        allowed = payload_fields(req_id, kind)
        if not allowed:
            raise src.fail(at + ("structured",), f"{req_id} takes no structured payload")
        if not isinstance(payload, dict):
            raise src.fail(at + ("structured",), "structured payload must be an object")
        structured = {}
        for key, item in payload.items():
            if key not in allowed:
                raise src.fail(at + ("structured", key), f"unknown structured key {key!r} for {req_id}")
            try:
                structured[key] = allowed[key](item)
            except ValueError as exc:
                raise src.fail(at + ("structured", key), f"{req_id}.{key}: {exc}") from None

    try:
        return RequirementResponse(
            status=status,
            body=obj.get("body", ""),
            justification=obj.get("justification", ""),
            evidence=tuple(evidence),
            structured=structured,
        )
    except ValueError as exc:
        raise src.fail(at, f"{req_id}: {exc}") from None


def parse_card(raw: bytes, kind: CardKind, catalog: Catalog | None = None, path: str = "<card>") -> CardDoc:
    catalog = catalog or load_catalog()
    src = _Source(raw, path)
    doc = src.object_at(src.data, (), {"kind", "responses"})
    if doc["kind"] != kind.value:
        raise src.fail(("kind",), f"expected kind {kind.value!r}, found {doc['kind']!r}")
    responses_raw = doc["responses"]
    if not isinstance(responses_raw, dict):
        raise src.fail(("responses",), "responses must be an object keyed by requirement id")
    responses: dict[str, RequirementResponse] = {}
    for req_id, value in responses_raw.items():
        line, col = src.where(("responses", req_id))
        if req_id not in catalog:
            raise UnknownRequirementId(req_id, path, line, col)
        if catalog.get(req_id).card is not kind:
            raise KindMismatch(req_id, kind, path, line, col)
        responses[req_id] = _parse_response(src, req_id, kind, value)
    return CardDoc(kind, responses)


def parse_manifest(raw: bytes, path: str = MANIFEST_FILE) -> Manifest:
    src = _Source(raw, path)
    doc = src.object_at(
        src.data, (), {"name", "version", "declared_risk_class", "flags", "kpis", "contact"}, {"deferred"}
    )
    for key in ("name", "version", "contact"):
        if not isinstance(doc[key], str):
            raise src.fail((key,), f"{key} must be a string")
    if not doc["name"].strip():
        raise src.fail(("name",), "name must not be empty")
    try:
        risk = RiskClass.from_dict(src.object_at(doc["declared_risk_class"], ("declared_risk_class",), {"class"},
                                                 {"transparency_obligations"}))
    except ValueError as exc:
        raise src.fail(("declared_risk_class",), str(exc)) from None
    try:
        flags = ContextFlags.from_dict(src.object_at(doc["flags"], ("flags",), set(), set(ContextFlags().as_dict())))
    except ValueError as exc:
        raise src.fail(("flags",), str(exc)) from None
    try:
        kpis = _as_kpis(doc["kpis"])
    except ValueError as exc:
        raise src.fail(("kpis",), str(exc)) from None
    deferred: dict[CardKind, str] = {}
    for name, why in src.object_at(doc.get("deferred", {}), ("deferred",), set(), {k.value for k in CardKind}).items():
        if not isinstance(why, str) or not why.strip():
            raise src.fail(("deferred", name), "a deferred card needs a justification")
        deferred[CardKind(name)] = why
    return Manifest(
        name=doc["name"],
        version=doc["version"],
        declared_risk_class=risk,
        flags=flags,
        kpis=kpis,
        contact=doc["contact"],
        deferred=deferred,
    )


def parse_bundle(root: str | Path, catalog: Catalog | None = None) -> CardBundle:
    catalog = catalog or load_catalog()
    root = Path(root)
    manifest_path = root / MANIFEST_FILE
    if not manifest_path.is_file():
        raise MissingManifest(str(root))
    manifest = parse_manifest(manifest_path.read_bytes(), str(manifest_path))
    cards: dict[CardKind, CardDoc] = {}
    for kind in CARD_ORDER:
        card_path = root / kind.filename
        if card_path.is_file():
            cards[kind] = parse_card(card_path.read_bytes(), kind, catalog, str(card_path))
        elif kind in manifest.deferred:
            cards[kind] = CardDoc(kind, {})
        else:
            raise MissingCard(str(card_path), kind)
    return CardBundle(
        manifest,
        cards[CardKind.USE_CASE],
        cards[CardKind.DATA],
        cards[CardKind.MODEL],
        cards[CardKind.OPERATION],
    )


# --- serialization ---------------------------------------------------------------


def _dumps(data: dict) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def bundle_documents(bundle: CardBundle, catalog: Catalog | None = None) -> dict[str, str]:
    """File name to JSON text for every document of the bundle."""
    docs = {MANIFEST_FILE: _dumps(bundle.manifest.to_dict())}
    for card in bundle.cards:
        docs[card.kind.filename] = _dumps(card.to_dict(catalog))
    return docs


def write_bundle(bundle: CardBundle, root: str | Path, catalog: Catalog | None = None) -> list[Path]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in bundle_documents(bundle, catalog).items():
        target = root / name
        target.write_text(text, encoding="utf-8")
        written.append(target)
    return written


def json_schema(name: str) -> dict:
    """Shipped JSON Schema document: ``manifest``, ``card`` or ``catalog``."""
    from importlib import resources

    text = resources.files("cardwright").joinpath(f"schemas/{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
