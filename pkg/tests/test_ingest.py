import json
import jsonschema
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cardwright.ingest import (
    CONTENT_THEMES,
    CardBundle,
    CardDoc,
    Direction,
    DuplicateKey,
    KindMismatch,
    KpiSpec,
    MalformedDocument,
    MissingCard,
    MissingManifest,
    RequirementResponse,
    ResponseStatus,
    UnknownRequirementId,
    bundle_documents,
    json_schema,
    parse_bundle,
    parse_card,
    parse_manifest,
    write_bundle,
)
from cardwright.schema import CardKind, RiskClass, RiskTier
from conftest import TOY, edit_json


def card_bytes(kind, responses):
    return json.dumps({"kind": kind, "responses": responses}).encode()


def test_toy_bundle(toy_bundle):
    m = toy_bundle.manifest
    assert m.declared_risk_class == RiskClass(RiskTier.MINIMAL)
    assert m.kpis == (
        KpiSpec("recall", 0.99, Direction.AT_LEAST),
        KpiSpec("precision", 0.90, Direction.AT_LEAST),
        KpiSpec("inference_time", 1, Direction.AT_MOST, "s"),
    )
    assert [c.kind for c in toy_bundle.cards] == list(CardKind)
    assert all(c.responses for c in toy_bundle.cards)
    assert toy_bundle.use_case.get("UC-SOL-03").body.startswith("A recall above 99% is targeted")


def test_empty_directory(tmp_path):
    with pytest.raises(MissingManifest):
        parse_bundle(tmp_path)


def test_model_card_with_use_case_key(toy_copy):
    edit_json(toy_copy / "model.json",
              lambda d: d["responses"].update({"UC-GEN-01": {"status": "Addressed", "body": "x"}}))
    with pytest.raises(KindMismatch) as info:
        parse_bundle(toy_copy)
    assert info.value.id == "UC-GEN-01"
    assert info.value.card is CardKind.MODEL


def test_minimal_data_card():
    doc = parse_card(card_bytes("Data", {"DC-GEN-01": {"status": "Addressed", "body": "Jane"}}), CardKind.DATA)
    assert doc == CardDoc(CardKind.DATA, {"DC-GEN-01": RequirementResponse(ResponseStatus.ADDRESSED, "Jane")})


def test_not_applicable_needs_justification():
    raw = card_bytes("Data", {"DC-COLL-11": {"status": "NotApplicable", "justification": "  "}})
    with pytest.raises(MalformedDocument, match="justification"):
        parse_card(raw, CardKind.DATA)


def test_addressed_needs_body():
    with pytest.raises(MalformedDocument, match="non-empty body"):
        parse_card(card_bytes("Data", {"DC-GEN-01": {"status": "Addressed"}}), CardKind.DATA)


def test_justification_only_on_not_applicable():
    raw = card_bytes("Data", {"DC-GEN-01": {"status": "Todo", "justification": "later"}})
    with pytest.raises(MalformedDocument):
        parse_card(raw, CardKind.DATA)


def test_unknown_requirement_id():
    raw = b'{\n  "kind": "Data",\n  "responses": {\n    "DC-GEN-99": {"status": "Todo"}\n  }\n}'
    with pytest.raises(UnknownRequirementId) as info:
        parse_card(raw, CardKind.DATA)
    assert info.value.id == "DC-GEN-99"
    assert (info.value.line, info.value.column) == (4, 5)


def test_duplicate_key_points_at_second_occurrence():
    raw = (b'{"kind": "Data", "responses": {\n "DC-GEN-01": {"status": "Todo"},\n'
           b' "DC-GEN-01": {"status": "Todo"}}}')
    with pytest.raises(DuplicateKey) as info:
        parse_card(raw, CardKind.DATA)
    assert info.value.id == "DC-GEN-01"
    assert info.value.line == 3


@pytest.mark.parametrize(
    "raw, reason",
    [
        (b'{"kind": "Data", "responses": {}, "extra": 1}', "unknown key"),
        (b'{"kind": "Data"}', "missing required key"),
        (b'{"kind": "Model", "responses": {}}', "expected kind"),
        (b'{"kind": "Data", "responses": []}', "responses must be an object"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": "Done"}}}', "status must be"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": "Todo", "notes": ""}}}', "unknown key"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": "Todo", "evidence": "a.pdf"}}}', "evidence"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": "Todo", "body": 3}}}', "body must be"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": "Todo", "structured": {"kpis": []}}}}',
         "unknown structured key"),
        (b'{"kind": "Data", "responses": {"DC-SPLIT-01": {"status": "Todo", "structured": '
         b'{"splits": {"train": 0.7, "test": 0.2}}}}}', "sum to 1"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": "Todo", "structured": '
         b'{"content_themes": [0]}}}}', "content theme"),
        (b'{"kind": "Data", "responses": {}', "Expecting"),
        (b'[1, 2]', "expected a JSON object"),
        (b'{"kind": "Data", "responses": {"DC-GEN-01": {"status": NaN}}}', "NaN"),
    ],
)
def test_malformed_documents(raw, reason):
    with pytest.raises(MalformedDocument) as info:
        parse_card(raw, CardKind.DATA)
    assert reason in info.value.reason
    text = raw.decode()
    assert 1 <= info.value.line <= text.count("\n") + 1


def test_structured_on_unregistered_row():
    raw = card_bytes("Model", {"MC-GEN-01": {"status": "Addressed", "body": "x", "structured": {"kpis": []}}})
    with pytest.raises(MalformedDocument, match="takes no structured payload"):
        parse_card(raw, CardKind.MODEL)


def test_invalid_utf8_position():
    raw = b'{"kind": "Data",\n "responses": {"DC-GEN-01": {"status": "Addressed", "body": "caf\xe9"}}}'
    with pytest.raises(MalformedDocument, match="UTF-8") as info:
        parse_card(raw, CardKind.DATA)
    assert info.value.line == 2


def test_content_themes_and_splits_parse():
    raw = card_bytes("Data", {
        "DC-SPLIT-01": {"status": "Addressed", "body": "80/20", "structured": {"splits": {"train": 0.8, "test": 0.2},
                                                                                "content_themes": [17, 29]}}})
    doc = parse_card(raw, CardKind.DATA)
    assert doc.structured("DC-SPLIT-01", "content_themes") == (17, 29)
    assert len(CONTENT_THEMES) == 31


@pytest.mark.parametrize(
    "kpi",
    [
        {"metric": "", "threshold": 0.5, "direction": "AtLeast"},
        {"metric": "recall", "threshold": 1.5, "direction": "AtLeast"},
        {"metric": "latency", "threshold": -1, "direction": "AtMost", "unit": "s"},
        {"metric": "recall", "threshold": 0.5, "direction": "Above"},
        {"metric": "recall", "threshold": True, "direction": "AtLeast"},
        {"metric": "recall", "threshold": 0.5},
    ],
)
def test_bad_kpis_rejected(kpi):
    with pytest.raises(ValueError):
        KpiSpec.from_dict(kpi)


def test_missing_card_unless_deferred(toy_copy):
    (toy_copy / "operation.json").unlink()
    with pytest.raises(MissingCard):
        parse_bundle(toy_copy)
    edit_json(toy_copy / "manifest.json", lambda d: d.update(deferred={"Operation": "not deployed yet"}))
    bundle = parse_bundle(toy_copy)
    assert bundle.operation == CardDoc(CardKind.OPERATION, {})
    assert bundle.manifest.deferred == {CardKind.OPERATION: "not deployed yet"}


def test_deferral_needs_justification(toy_copy):
    edit_json(toy_copy / "manifest.json", lambda d: d.update(deferred={"Operation": ""}))
    with pytest.raises(MalformedDocument, match="justification"):
        parse_bundle(toy_copy)


MANIFEST_FIELDS = ["name", "version", "contact", "declared_risk_class", "flags", "kpis"]


@pytest.mark.parametrize("field", MANIFEST_FIELDS)
def test_removing_any_required_manifest_field_rejects(field):
    data = json.loads((TOY / "manifest.json").read_text())
    del data[field]
    with pytest.raises(MalformedDocument):
        parse_manifest(json.dumps(data).encode())


@pytest.mark.parametrize("flag", ["fairness_risk", "is_gpai"])
def test_manifest_flags_must_be_total(flag):
    data = json.loads((TOY / "manifest.json").read_text())
    del data["flags"][flag]
    with pytest.raises(MalformedDocument, match="missing flags"):
        parse_manifest(json.dumps(data).encode())


def test_empty_name_rejected():
    data = json.loads((TOY / "manifest.json").read_text())
    data["name"] = " "
    with pytest.raises(MalformedDocument):
        parse_manifest(json.dumps(data).encode())


def test_round_trip(toy_bundle, tmp_path, catalog):
    write_bundle(toy_bundle, tmp_path / "again")
    again = parse_bundle(tmp_path / "again")
    assert again == toy_bundle
    assert bundle_documents(again, catalog) == bundle_documents(toy_bundle, catalog)


def test_fixture_matches_shipped_schemas():
    validators = {name: jsonschema.Draft202012Validator(json_schema(name)) for name in ("manifest", "card")}
    for v in validators.values():
        jsonschema.Draft202012Validator.check_schema(v.schema)
    validators["manifest"].validate(json.loads((TOY / "manifest.json").read_text()))
    for kind in CardKind:
        validators["card"].validate(json.loads((TOY / kind.filename).read_text()))


def test_catalog_matches_shipped_schema(catalog):
    jsonschema.validate(catalog.to_dict(), json_schema("catalog"), cls=jsonschema.Draft202012Validator)


# Round-trip over generated bundles

status_st = st.sampled_from(list(ResponseStatus))
text_st = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=20).filter(str.strip)


@st.composite
def responses(draw, kind, catalog_ids):
    ids = draw(st.lists(st.sampled_from(catalog_ids), unique=True, max_size=6))
    out = {}
    for rid in ids:
        status = draw(status_st)
        body = draw(text_st) if status is ResponseStatus.ADDRESSED else draw(st.sampled_from(["", "draft"]))
        justification = draw(text_st) if status is ResponseStatus.NOT_APPLICABLE else ""
        evidence = tuple(draw(st.lists(text_st, max_size=2)))
        out[rid] = RequirementResponse(status, body, justification, evidence)
    return CardDoc(kind, out)


def _ids(kind):
    from cardwright.schema import load_catalog

    return [e.id for e in load_catalog().for_card(kind)]


@settings(max_examples=40, suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
@given(
    uc=responses(CardKind.USE_CASE, _ids(CardKind.USE_CASE)),
    dc=responses(CardKind.DATA, _ids(CardKind.DATA)),
    mc=responses(CardKind.MODEL, _ids(CardKind.MODEL)),
    oc=responses(CardKind.OPERATION, _ids(CardKind.OPERATION)),
)
def test_generated_bundles_round_trip(tmp_path_factory, toy_bundle, uc, dc, mc, oc):
    bundle = CardBundle(toy_bundle.manifest, uc, dc, mc, oc)
    root = tmp_path_factory.mktemp("rt")
    write_bundle(bundle, root)
    assert parse_bundle(root) == bundle


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=80))
def test_error_positions_lie_within_input(raw):
    try:
        parse_card(raw, CardKind.DATA)
    except MalformedDocument as exc:
        text = raw.decode("utf-8", errors="replace")
        assert 1 <= exc.line <= text.count("\n") + 1
        assert exc.column >= 1
    except (UnknownRequirementId, DuplicateKey, KindMismatch):
        pass


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2000))
def test_truncated_fixture_errors_are_located(cut):
    raw = (TOY / "model.json").read_bytes()[:cut]
    with pytest.raises(MalformedDocument) as info:
        parse_card(raw, CardKind.MODEL)
    text = raw.decode("utf-8", errors="replace")
    assert 1 <= info.value.line <= text.count("\n") + 1

