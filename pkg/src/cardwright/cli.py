"""Command-line interface.

Exit codes: 0 no Error findings, 1 Error findings present, 2 parse or usage failure.
``classify`` instead exits 0 for Minimal, 20 for HighRisk and 30 for Prohibited.
Every option can also be set through a ``CARDWRIGHT_`` environment variable
(``CARDWRIGHT_FORMAT``, ``CARDWRIGHT_VALIDATE_REDACT``, ...); explicit flags win.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from cardwright import __version__
from cardwright.ingest import (
    CardBundle,
    CardDoc,
    IngestError,
    Manifest,
    RequirementResponse,
    ResponseStatus,
    parse_bundle,
    write_bundle,
)
from cardwright.report import ReportFormat, ReportOptions, render
from cardwright.riskclass import EXIT_CODES, UseCaseAttributes, classify
from cardwright.rules import attributes_for_bundle, validate_bundle
from cardwright.schema import (
    CARD_ORDER,
    FLAG_NAMES,
    ContextFlags,
    RiskClass,
    RiskTier,
    export_catalog,
    requirements_for,
)
from cardwright.stats import (
    DEFAULT_VARIANCE_THRESHOLD,
    Confidence,
    fit_learning_curve,
    required_n,
    sample_size,
    variance_check,
)

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE = 0, 1, 2

FORMAT_CHOICE = click.Choice([f.value.lower() for f in ReportFormat] + ["md"], case_sensitive=False)


@dataclass
class Settings:
    format: str | None = None
    output: str | None = None
    quiet: bool = False


def _settings(ctx: click.Context, fmt: str | None = None, output: str | None = None, quiet: bool = False) -> Settings:
    base: Settings = ctx.find_object(Settings) or Settings()
    return Settings(fmt or base.format, output or base.output, quiet or base.quiet)


def _note(settings: Settings, message: str) -> None:
    if not settings.quiet:
        click.echo(message, err=True)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USAGE)


def _emit(settings: Settings, payload: bytes) -> None:
    if settings.output:
        target = Path(settings.output)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(payload)
        except OSError as exc:
            _fail(f"cannot write {target}: {exc}")
        _note(settings, f"wrote {target}")
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()


def _emit_json(settings: Settings, data) -> None:
    _emit(settings, (json.dumps(data, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))


def _load_bundle(path: str) -> CardBundle:
    try:
        return parse_bundle(path)
    except IngestError as exc:
        _fail(str(exc))
    except OSError as exc:
        _fail(f"cannot read bundle: {exc}")


def _format_options(f):
    f = click.option("--format", "format", type=FORMAT_CHOICE, default=None, help="Output format.")(f)
    f = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Write to a file.")(f)
    f = click.option("--quiet", "-q", is_flag=True, default=False, help="Suppress diagnostics on stderr.")(f)
    return f


@click.group(context_settings={"auto_envvar_prefix": "CARDWRIGHT", "help_option_names": ["-h", "--help"]})
@_format_options
@click.version_option(__version__, prog_name="cardwright")
@click.pass_context
def cli(ctx: click.Context, format: str | None, output: str | None, quiet: bool) -> None:
    """Validate AI documentation card bundles and render audit reports.

    \b
    Exit codes:
      0   no Error findings
      1   Error findings present
      2   parse or usage failure
      20  classify: HighRisk
      30  classify: Prohibited
    """
    ctx.obj = Settings(format, output, quiet)


# --- init ---------------------------------------------------------------------------


@cli.command()
@click.argument("path", type=click.Path(file_okay=False))
@click.option("--risk-class", "risk", type=click.Choice([t.value for t in RiskTier]), default=RiskTier.MINIMAL.value,
              show_default=True, help="Declared risk class.")
@click.option("--transparency", is_flag=True, help="Declare transparency obligations.")
@click.option("--flag", "flags", multiple=True, type=click.Choice(FLAG_NAMES), help="Set a context flag (repeatable).")
@click.option("--name", default=None, help="Bundle name; defaults to the directory name.")
@click.option("--contact", default="", help="Contact person.")
@click.option("--quiet", "-q", is_flag=True, default=False)
@click.pass_context
def init(ctx, path, risk, transparency, flags, name, contact, quiet) -> None:
    """Write a bundle skeleton with every applicable requirement at status Todo."""
    settings = _settings(ctx, quiet=quiet)
    root = Path(path)
    if root.exists() and (not root.is_dir() or any(root.iterdir())):
        _fail(f"{root} exists and is not empty; refusing to overwrite")
    risk_class = RiskClass(RiskTier(risk), transparency)
    context = ContextFlags(**{f: True for f in flags})
    manifest = Manifest(
        name=name or root.resolve().name or "bundle",
        version="0.1.0",
        declared_risk_class=risk_class,
        flags=context,
        kpis=(),
        contact=contact,
    )
    cards = {
        kind: CardDoc(kind, {req.id: RequirementResponse(ResponseStatus.TODO)
                             for req, _ in requirements_for(kind, risk_class, context)})
        for kind in CARD_ORDER
    }
    bundle = CardBundle(manifest, *(cards[k] for k in CARD_ORDER))
    try:
        written = write_bundle(bundle, root)
    except OSError as exc:
        _fail(f"cannot write bundle: {exc}")
    todo = sum(len(c.responses) for c in cards.values())
    _note(settings, f"wrote {len(written)} files to {root} with {todo} Todo requirements")


# --- validate / report ----------------------------------------------------------------


def _render_bundle(ctx, path, fmt, output, quiet, redact, figures, default_format):
    settings = _settings(ctx, fmt, output, quiet)
    bundle = _load_bundle(path)
    report = validate_bundle(bundle)
    report_format = ReportFormat.parse(settings.format or default_format)
    opts = ReportOptions(format=report_format, redact_business_sensitive=redact)
    _emit(settings, render(bundle, report, opts))
    if figures:
        from cardwright.plotting import completeness_figure, save_figure

        target = save_figure(completeness_figure(report), Path(figures) / "completeness.png")
        _note(settings, f"wrote {target}")
    _note(
        settings,
        f"{report.risk_decision.tier.value}: {len(report.findings)} findings, "
        f"completeness {report.overall.answered}/{report.overall.applicable}",
    )
    return report


def _bundle_command(f):
    f = click.option("--figures", type=click.Path(file_okay=False), default=None,
                     help="Directory for PNG figures rendered alongside the report.")(f)
    f = click.option("--redact", is_flag=True, default=False, help="Redact business-sensitive responses.")(f)
    f = _format_options(f)
    return click.argument("path", type=click.Path())(f)


@cli.command()
@_bundle_command
@click.pass_context
def validate(ctx, path, format, output, quiet, redact, figures) -> None:
    """Parse, classify and validate a bundle; exit 1 when Error findings exist."""
    report = _render_bundle(ctx, path, format, output, quiet, redact, figures, "markdown")
    sys.exit(EXIT_FINDINGS if report.has_errors else EXIT_OK)


@cli.command()
@_bundle_command
@click.pass_context
def report(ctx, path, format, output, quiet, redact, figures) -> None:
    """Render the audit report without gating on findings."""
    _render_bundle(ctx, path, format, output, quiet, redact, figures, "markdown")


# --- classify -----------------------------------------------------------------------


@cli.command(name="classify")
@click.option("--attrs", type=click.Path(dir_okay=False, exists=True), default=None,
              help="JSON use case attribute document.")
@click.option("--bundle", "bundle_path", type=click.Path(file_okay=False), default=None,
              help="Classify the use case of a bundle instead.")
@click.option("--provider-note", default=None, help="Provider self-assessment quoted in the rationale.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.option("--quiet", "-q", is_flag=True, default=False)
@click.pass_context
def classify_cmd(ctx, attrs, bundle_path, provider_note, output, quiet) -> None:
    """Print the risk-class decision as JSON; the rationale goes to stderr.

    Exit code 0 Minimal, 20 HighRisk, 30 Prohibited.
    """
    settings = _settings(ctx, None, output, quiet)
    if (attrs is None) == (bundle_path is None):
        _fail("give exactly one of --attrs or --bundle")
    if attrs is not None:
        try:
            data = json.loads(Path(attrs).read_text(encoding="utf-8"))
            attributes = UseCaseAttributes.from_dict(data)
        except (OSError, ValueError) as exc:
            _fail(f"{attrs}: {exc}")
        note = provider_note
    else:
        attributes, note = attributes_for_bundle(_load_bundle(bundle_path))
        note = provider_note or note
    decision = classify(attributes, note)
    _emit_json(settings, decision.to_dict())
    _note(settings, decision.rationale)
    sys.exit(EXIT_CODES[decision.tier])


# --- stats --------------------------------------------------------------------------


@cli.group()
def stats() -> None:
    """Dataset statistics: test-set size, run variance, learning curves."""


@stats.command(name="sample-size")
@click.option("--p", "p", type=float, default=0.5, show_default=True, help="Expected prevalence.")
@click.option("--epsilon", type=float, required=True, help="Error margin.")
@click.option("--confidence", default="95", show_default=True, help="90, 95 or 99.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def sample_size_cmd(ctx, p, epsilon, confidence, output) -> None:
    """Smallest test set for a proportion estimate."""
    settings = _settings(ctx, None, output)
    try:
        spec = sample_size(p, epsilon, Confidence.parse(confidence))
    except ValueError as exc:
        _fail(str(exc))
    _emit_json(settings, spec.to_dict())


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


@stats.command(name="variance")
@click.option("--scores", required=True, help="Scores of repeated runs, comma or space separated.")
@click.option("--threshold", type=float, default=DEFAULT_VARIANCE_THRESHOLD, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def variance_cmd(ctx, scores, threshold, output) -> None:
    """Flag a test set whose run-to-run standard deviation exceeds the threshold."""
    settings = _settings(ctx, None, output)
    try:
        result = variance_check(_floats(scores), threshold)
    except ValueError as exc:
        _fail(str(exc))
    _emit_json(settings, result.to_dict())


def _read_points(path: str) -> list[tuple[float, float]]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith(("[", "{")):
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["points"]
        return [(float(n), float(perf)) for n, perf in data]
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if rows and not rows[0][0].strip().replace(".", "", 1).isdigit():
        rows = rows[1:]
    return [(float(r[0]), float(r[1])) for r in rows]


@stats.command(name="curve")
@click.option("--points", required=True, type=click.Path(dir_okay=False, exists=True),
              help="JSON [[n, perf], ...] or two-column CSV.")
@click.option("--target", type=float, default=None, help="Performance to reach.")
@click.option("--cap", type=float, default=100.0, show_default=True, help="Extrapolation cap, multiples of max n.")
@click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Write the fitted curve as PNG.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def curve_cmd(ctx, points, target, cap, plot, output) -> None:
    """Fit perf = a + b ln n and optionally estimate the n needed for a target."""
    settings = _settings(ctx, None, output)
    try:
        fit = fit_learning_curve(_read_points(points))
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        _fail(f"{points}: {exc}")
    result = fit.to_dict()
    needed = None
    if target is not None:
        needed = required_n(fit, target, cap)
        result["target"] = target
        result["required_n"] = needed
        result["reachable"] = needed is not None
    _emit_json(settings, result)
    if plot:
        from cardwright.plotting import learning_curve_figure, save_figure

        _note(settings, f"wrote {save_figure(learning_curve_figure(fit, target, needed), plot)}")


# --- catalog ------------------------------------------------------------------------


@cli.group()
def catalog() -> None:
    """Inspect the embedded requirement catalog."""


@catalog.command(name="export")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def catalog_export(ctx, output) -> None:
    """Write the catalog as JSON."""
    _emit(_settings(ctx, None, output), export_catalog().encode("utf-8"))


def main(argv: list[str] | None = None) -> None:
    cli.main(args=argv, prog_name="cardwright")

