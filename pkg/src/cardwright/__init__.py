"""Machine-readable AI documentation cards: catalog, validation, risk classification, reports."""

__version__ = "0.1.0"

from cardwright.ingest import CardBundle, parse_bundle, parse_card  # noqa: E402
from cardwright.riskclass import UseCaseAttributes, classify  # noqa: E402
from cardwright.rules import FindingReport, validate_bundle  # noqa: E402
from cardwright.schema import CardKind, ContextFlags, RiskClass, load_catalog, requirements_for  # noqa: E402

__all__ = [
    "CardBundle",
    "CardKind",
    "ContextFlags",
    "FindingReport",
    "RiskClass",
    "UseCaseAttributes",
    "__version__",
    "classify",
    "load_catalog",
    "parse_bundle",
    "parse_card",
    "requirements_for",
    "validate_bundle",
]
