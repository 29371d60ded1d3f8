"""Deterministic audit reports in Markdown, HTML, JSON and SARIF."""

from __future__ import annotations

import html
import json
from dataclasses import dataclass, replace
from enum import Enum

from cardwright import __version__
from cardwright.ingest import CardBundle, RequirementResponse, ResponseStatus
from cardwright.rules import CROSS_CHECKS, Finding, FindingReport
from cardwright.schema import CARD_ORDER, Catalog, EffectiveSeverity, load_catalog

REDACTED = "[redacted: business-sensitive]"
SARIF_SCHEMA = "https://json.schemastore.org/sarif-2.1.0.json"
_SARIF_LEVEL = {
    EffectiveSeverity.ERROR: "error",
    EffectiveSeverity.WARNING: "warning",
    EffectiveSeverity.INFO: "note",
}


class ReportFormat(str, Enum):
    MARKDOWN = "Markdown"
    HTML = "Html"
    JSON = "Json"
    SARIF = "Sarif"

    @classmethod
    def parse(cls, text: str) -> ReportFormat:
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        aliases = {"md": cls.MARKDOWN, "htm": cls.HTML}
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown report format {text!r}") from None

    @property
    def extension(self) -> str:
        return {"Markdown": ".md", "Html": ".html", "Json": ".json", "Sarif": ".sarif"}[self.value]


@dataclass(frozen=True)
class ReportOptions:
    format: ReportFormat = ReportFormat.MARKDOWN
    include_catalog_text: bool = True
    redact_business_sensitive: bool = False


def business_sensitive_ids(catalog: Catalog) -> frozenset[str]:
    """Rows that only apply when business-sensitive data is present."""
    return frozenset(e.id for e in catalog if "sensitive_business_data" in e.condition.flags())


def _redact(report: FindingReport, hidden: frozenset[str]) -> FindingReport:
    findings = tuple(
        replace(f, message=REDACTED) if f.code in hidden and f.message.startswith("Marked not applicable") else f
        for f in report.findings
    )
    return replace(report, findings=findings)


# --- intermediate structure --------------------------------------------------------


@dataclass(frozen=True)
class Row:
    step: str
    req_id: str
    requirement: str
    response: str
    finding: str


@dataclass(frozen=True)
class CardSection:
    title: str
    score: str
    rows: tuple[Row, ...]
    deferred: str | None = None


@dataclass(frozen=True)
class ReportModel:
    title: str
    summary: tuple[tuple[str, str], ...]
    notes: tuple[str, ...]
    sections: tuple[CardSection, ...]
    cross: tuple[Finding, ...]


def _response_text(resp: RequirementResponse | None) -> str:
    if resp is None:
        return "(no response)"
    if resp.status is ResponseStatus.TODO:
        text = "Todo" + (f": {resp.body}" if resp.body else "")
    elif resp.status is ResponseStatus.NOT_APPLICABLE:
        text = f"Not applicable: {resp.justification}"
        if resp.body:
            text += f" {resp.body}"
    else:
        text = resp.body
    if resp.evidence:
        text += " (evidence: " + ", ".join(resp.evidence) + ")"
    return " ".join(text.split())


def _score_text(score) -> str:
    return f"{score.answered}/{score.applicable} answered ({score.value:.1%})"


def build_model(bundle: CardBundle, report: FindingReport, opts: ReportOptions, catalog: Catalog) -> ReportModel:
    hidden = business_sensitive_ids(catalog) if opts.redact_business_sensitive else frozenset()
    by_code: dict[str, list[Finding]] = {}
    for f in report.findings:
        by_code.setdefault(f.code, []).append(f)
    flags = bundle.manifest.flags.as_dict()

    sections = []
    for kind in CARD_ORDER:
        card = bundle.card(kind)
        rows = []
        previous_step = None
        for req in catalog.for_card(kind):
            resp = card.get(req.id)
            if resp is None and not req.applies(flags):
                continue
            response = REDACTED if req.id in hidden and resp is not None else _response_text(resp)
            finding = "; ".join(f"{f.severity.value}: {f.message}" for f in by_code.get(req.id, ()))
            rows.append(
                Row(
                    step=req.step if req.step != previous_step else "",
                    req_id=req.id,
                    requirement=req.text if opts.include_catalog_text else "",
                    response=response,
                    finding=finding,
                )
            )
            previous_step = req.step
        sections.append(
            CardSection(kind.title, _score_text(report.per_card_scores[kind]), tuple(rows),
                        bundle.manifest.deferred.get(kind))
        )

    decision = report.risk_decision
    declared = bundle.manifest.declared_risk_class
    counts = ", ".join(f"{report.count(s)} {s.value.lower()}" for s in EffectiveSeverity)
    summary = (
        ("Version", bundle.manifest.version),
        ("Contact", bundle.manifest.contact),
        ("Catalog", report.catalog_version),
        ("Risk class (classified)", _risk_text(decision.risk_class)),
        ("Risk class (declared)", _risk_text(declared)),
        ("Triggers", ", ".join(str(t) for t in decision.triggers) or "none"),
        ("Provisional triggers", ", ".join(str(t) for t in decision.provisional_triggers) or "none"),
        ("Rationale", decision.rationale),
        ("Completeness", _score_text(report.overall)),
        ("Findings", counts),
    )
    cross = tuple(f for f in report.findings if f.code in CROSS_CHECKS)
    return ReportModel(f"Audit report: {bundle.manifest.name}", summary, report.notes, tuple(sections), cross)


def _risk_text(rc) -> str:
    return rc.tier.value + (" (transparency obligations)" if rc.transparency_obligations else "")


# --- Markdown -----------------------------------------------------------------------


def _md_cell(text: str) -> str:
    return " ".join(text.split()).replace("\\", "\\\\").replace("|", "\\|")


def _md_inline(text: str) -> str:
    return " ".join(text.split())


def _markdown(model: ReportModel, opts: ReportOptions) -> str:
    out = [f"# {_md_inline(model.title)}", ""]
    out += ["## Summary", ""]
    out += [f"- **{label}:** {_md_inline(value)}" for label, value in model.summary]
    if model.notes:
        out += ["", "Notes:", ""]
        out += [f"- {_md_inline(n)}" for n in model.notes]
    for section in model.sections:
        out += ["", f"## {section.title}", "", f"Completeness: {section.score}", ""]
        if section.deferred:
            out += [f"Deferred: {_md_inline(section.deferred)}", ""]
        out += ["| Step | Requirement | Response | Finding |", "| --- | --- | --- | --- |"]
        for row in section.rows:
            requirement = f"{row.req_id} {row.requirement}".strip()
            out.append(
                f"| {_md_cell(row.step)} | {_md_cell(requirement)} | {_md_cell(row.response)} | {_md_cell(row.finding)} |"
            )
    out += ["", "## Cross-card checks", ""]
    if model.cross:
        out += ["| Code | Severity | Location | Message |", "| --- | --- | --- | --- |"]
        for f in model.cross:
            out.append(f"| {f.code} | {f.severity.value} | {_md_cell(f.location)} | {_md_cell(f.message)} |")
    else:
        out.append("No cross-card findings.")
    return "\n".join(out) + "\n"


# --- HTML ---------------------------------------------------------------------------

_CSS = (
    "body{font-family:sans-serif;max-width:72rem;margin:2rem auto;line-height:1.4}"
    "table{border-collapse:collapse;width:100%}"
    "th,td{border:1px solid #bbb;padding:.3rem .5rem;vertical-align:top;text-align:left}"
    "th{background:#eee}"
)


def _html(model: ReportModel, opts: ReportOptions) -> str:
    e = html.escape
    out = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{e(model.title)}</title>",
        f"<style>{_CSS}</style>",
        "</head>",
        "<body>",
        f"<h1>{e(model.title)}</h1>",
        "<h2>Summary</h2>",
        "<dl>",
    ]
    for label, value in model.summary:
        out.append(f"<dt>{e(label)}</dt><dd>{e(value)}</dd>")
    out.append("</dl>")
    if model.notes:
        out.append("<ul>" + "".join(f"<li>{e(n)}</li>" for n in model.notes) + "</ul>")
    for section in model.sections:
        out.append(f"<h2>{e(section.title)}</h2>")
        out.append(f"<p>Completeness: {e(section.score)}</p>")
        if section.deferred:
            out.append(f"<p>Deferred: {e(section.deferred)}</p>")
        out.append("<table>")
        out.append("<tr><th>Step</th><th>Requirement</th><th>Response</th><th>Finding</th></tr>")
        for row in section.rows:
            requirement = f"{row.req_id} {row.requirement}".strip()
            out.append(
                f"<tr><td>{e(row.step)}</td><td>{e(requirement)}</td>"
                f"<td>{e(row.response)}</td><td>{e(row.finding)}</td></tr>"
            )
        out.append("</table>")
    out.append("<h2>Cross-card checks</h2>")
    if model.cross:
        out.append("<table>")
        out.append("<tr><th>Code</th><th>Severity</th><th>Location</th><th>Message</th></tr>")
        for f in model.cross:
            out.append(
                f"<tr><td>{e(f.code)}</td><td>{e(f.severity.value)}</td>"
                f"<td>{e(f.location)}</td><td>{e(f.message)}</td></tr>"
            )
        out.append("</table>")
    else:
        out.append("<p>No cross-card findings.</p>")
    out += ["</body>", "</html>"]
    return "\n".join(out) + "\n"


# --- SARIF --------------------------------------------------------------------------


def _artifact_uri(finding: Finding) -> str:
    card = finding.card
    return card.filename if card is not None else "manifest.json"


def sarif_document(report: FindingReport, catalog: Catalog) -> dict:
    rule_ids = sorted({f.code for f in report.findings}, key=lambda c: (c.startswith("XC-"), c))
    rules = []
    for code in rule_ids:
        if code in CROSS_CHECKS:
            text = CROSS_CHECKS[code]
        else:
            text = catalog.get(code).text
        rules.append({"id": code, "shortDescription": {"text": text}})
    index = {code: i for i, code in enumerate(rule_ids)}
    results = []
    for f in report.findings:
        results.append(
            {
                "ruleId": f.code,
                "ruleIndex": index[f.code],
                "level": _SARIF_LEVEL[f.severity],
                "message": {"text": f.message},
                "locations": [
                    {
                        "physicalLocation": {"artifactLocation": {"uri": _artifact_uri(f)}},
                        "logicalLocations": [{"fullyQualifiedName": f.location}],
                    }
                ],
            }
        )
    return {
        "$schema": SARIF_SCHEMA,
        "version": "2.1.0",
        "runs": [
            {
                "tool": {
                    "driver": {
                        "name": "cardwright",
                        "version": __version__,
                        "rules": rules,
                    }
                },
                "results": results,
                "properties": {
                    "catalogVersion": report.catalog_version,
                    "riskClass": report.risk_decision.risk_class.to_dict(),
                    "completeness": report.overall.to_dict(),
                },
            }
        ],
    }


def render(
    bundle: CardBundle, report: FindingReport, opts: ReportOptions | None = None, catalog: Catalog | None = None
) -> bytes:
    opts = opts or ReportOptions()
    catalog = catalog or load_catalog()
    if opts.redact_business_sensitive:
        report = _redact(report, business_sensitive_ids(catalog))
    if opts.format is ReportFormat.JSON:
        text = report.to_json()
    elif opts.format is ReportFormat.SARIF:
        text = json.dumps(sarif_document(report, catalog), indent=2, ensure_ascii=False) + "\n"
    else:
        model = build_model(bundle, report, opts, catalog)
        text = _markdown(model, opts) if opts.format is ReportFormat.MARKDOWN else _html(model, opts)
    return text.encode("utf-8")
