import json

import pytest
from click.testing import CliRunner

from cardwright.cli import cli, main
from cardwright.schema import export_catalog
from conftest import FIXTURES, edit_json

TOY_ATTRS = FIXTURES / "toy_attrs.json"


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(cli, [str(a) for a in args], env=env, catch_exceptions=False)


def todo_count(root):
    total = 0
    for name in ("use_case.json", "data.json", "model.json", "operation.json"):
        doc = json.loads((root / name).read_text(encoding="utf-8"))
        total += sum(r["status"] == "Todo" for r in doc["responses"].values())
    return total


def test_help_documents_exit_codes(runner):
    out = invoke(runner, "--help").output
    assert "Exit codes" in out and "20" in out and "30" in out


def test_version(runner):
    assert "cardwright" in invoke(runner, "--version").output


def test_init_minimal_lists_unconditional_requirements(runner, tmp_path, catalog):
    target = tmp_path / "bundle"
    result = invoke(runner, "init", target)
    assert result.exit_code == 0
    assert sorted(p.name for p in target.iterdir()) == [
        "data.json", "manifest.json", "model.json", "operation.json", "use_case.json"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bundle"]
    assert todo_count(target) == sum(1 for e in catalog if not e.is_conditional)


def test_init_foundation_model_includes_energy_row(runner, tmp_path):
    plain, fm = tmp_path / "plain", tmp_path / "fm"
    invoke(runner, "init", plain)
    invoke(runner, "init", fm, "--flag", "is_foundation_model")
    assert "MC-FM-02" not in (plain / "model.json").read_text()
    model = json.loads((fm / "model.json").read_text())
    assert model["responses"]["MC-FM-02"]["status"] == "Todo"


def test_init_skeleton_validates_with_warnings_only(runner, tmp_path):
    target = tmp_path / "b"
    invoke(runner, "init", target, "--flag", "manual_labeling")
    result = invoke(runner, "validate", target, "--format", "json")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["overall"]["value"] == 0.0


def test_init_refuses_non_empty_dir(runner, tmp_path):
    target = tmp_path / "b"
    target.mkdir()
    (target / "keep.txt").write_text("x")
    result = invoke(runner, "init", target)
    assert result.exit_code == 2
    assert [p.name for p in target.iterdir()] == ["keep.txt"]


def test_validate_toy_exits_zero(runner, toy_copy):
    result = invoke(runner, "validate", toy_copy)
    assert result.exit_code == 0
    assert result.stdout.startswith("# Audit report: Carbon fiber bicycle frame inspection")
    assert "Minimal: 10 findings, completeness 116/126" in result.stderr


def test_validate_fairness_contradiction_exits_one(runner, toy_copy):
    edit_json(toy_copy / "manifest.json", lambda m: m["flags"].update(fairness_risk=True))
    result = invoke(runner, "validate", toy_copy, "--format", "json")
    assert result.exit_code == 1
    assert "XC-01" in [f["code"] for f in json.loads(result.stdout)["findings"]]


def test_report_does_not_gate(runner, toy_copy):
    edit_json(toy_copy / "manifest.json", lambda m: m["flags"].update(fairness_risk=True))
    assert invoke(runner, "report", toy_copy).exit_code == 0


def test_missing_manifest_exits_two(runner, toy_copy):
    (toy_copy / "manifest.json").unlink()
    result = invoke(runner, "validate", toy_copy)
    assert result.exit_code == 2
    assert result.stdout == ""
    assert "manifest" in result.stderr


def test_malformed_card_reports_position(runner, toy_copy):
    (toy_copy / "data.json").write_text('{"kind": "Data",\n "responses": {,}}')
    result = invoke(runner, "validate", toy_copy)
    assert result.exit_code == 2
    assert "data.json" in result.stderr and ":2" in result.stderr


def test_output_file_and_figures(runner, toy_copy, tmp_path):
    out = tmp_path / "reports" / "toy.sarif"
    figs = tmp_path / "figs"
    result = invoke(runner, "validate", toy_copy, "--format", "sarif", "-o", out, "--figures", figs)
    assert result.exit_code == 0
    assert result.stdout == ""
    assert json.loads(out.read_text())["version"] == "2.1.0"
    assert (figs / "completeness.png").read_bytes().startswith(b"\x89PNG")


def test_quiet_silences_stderr(runner, toy_copy):
    assert invoke(runner, "validate", toy_copy, "-q").stderr == ""
    assert invoke(runner, "-q", "validate", toy_copy).stderr == ""


def test_group_format_applies_to_subcommand(runner, toy_copy):
    result = invoke(runner, "--format", "html", "validate", toy_copy)
    assert result.stdout.startswith("<!DOCTYPE html>")


def test_environment_variables_and_precedence(runner, toy_copy):
    env = {"CARDWRIGHT_FORMAT": "json"}
    assert json.loads(invoke(runner, "validate", toy_copy, env=env).stdout)["catalog_version"]
    result = invoke(runner, "validate", toy_copy, "--format", "markdown", env=env)
    assert result.stdout.startswith("# Audit report")
    env = {"CARDWRIGHT_VALIDATE_FORMAT": "sarif"}
    assert json.loads(invoke(runner, "validate", toy_copy, env=env).stdout)["version"] == "2.1.0"


def test_redact_flag(runner, toy_copy):
    result = invoke(runner, "report", toy_copy, "--redact")
    assert result.exit_code == 0


def test_classify_toy_attrs_is_minimal(runner):
    result = invoke(runner, "classify", "--attrs", TOY_ATTRS)
    assert result.exit_code == 0
    assert json.loads(result.stdout)["risk_class"]["class"] == "Minimal"
    assert result.stderr.strip()


def test_classify_bundle_quotes_provider_note(runner, toy_copy):
    result = invoke(runner, "classify", "--bundle", toy_copy)
    assert result.exit_code == 0
    assert "Low risk. Although the carbon fiber frame" in json.loads(result.stdout)["rationale"]


@pytest.mark.parametrize("change, code", [
    ({"domain_tags": ["EmploymentWorkersManagement"]}, 20),
    ({"manipulation_of_groups": True}, 30),
])
def test_classify_exit_codes(runner, tmp_path, change, code):
    data = json.loads(TOY_ATTRS.read_text())
    data.update(change)
    attrs = tmp_path / "attrs.json"
    attrs.write_text(json.dumps(data))
    assert invoke(runner, "classify", "--attrs", attrs).exit_code == code


def test_classify_needs_exactly_one_source(runner, toy_copy):
    assert invoke(runner, "classify").exit_code == 2
    assert invoke(runner, "classify", "--attrs", TOY_ATTRS, "--bundle", toy_copy).exit_code == 2


def test_classify_rejects_bad_attrs(runner, tmp_path):
    attrs = tmp_path / "a.json"
    attrs.write_text('{"domain_tags": ["Astrology"]}')
    assert invoke(runner, "classify", "--attrs", attrs).exit_code == 2


def test_stats_sample_size_prints_659(runner):
    result = invoke(runner, "stats", "sample-size", "--p", "0.01", "--epsilon", "0.01", "--confidence", "99")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["n"] == 659


def test_stats_sample_size_domain_error(runner):
    assert invoke(runner, "stats", "sample-size", "--epsilon", "0").exit_code == 2
    assert invoke(runner, "stats", "sample-size", "--epsilon", "0.05", "--confidence", "80").exit_code == 2


def test_stats_variance(runner):
    data = json.loads(invoke(runner, "stats", "variance", "--scores", "0.90,0.92,0.94").stdout)
    assert data["flagged"] and data["sample_std"] == pytest.approx(0.02)
    assert invoke(runner, "stats", "variance", "--scores", "0.9").exit_code == 2


@pytest.mark.parametrize("content", [
    "[[100, 0.7], [1000, 0.8], [10000, 0.9]]",
    "n,perf\n100,0.7\n1000,0.8\n10000,0.9\n",
])
def test_stats_curve(runner, tmp_path, content):
    pts = tmp_path / "pts.txt"
    pts.write_text(content)
    plot = tmp_path / "curve.png"
    result = invoke(runner, "stats", "curve", "--points", pts, "--target", "0.95", "--plot", plot)
    data = json.loads(result.stdout)
    assert data["b"] == pytest.approx(0.1 / 2.302585092994046)
    assert data["reachable"] and data["required_n"] > 10000
    assert plot.read_bytes().startswith(b"\x89PNG")


def test_stats_curve_unreachable_and_degenerate(runner, tmp_path):
    pts = tmp_path / "pts.json"
    pts.write_text("[[100, 0.7], [1000, 0.8]]")
    data = json.loads(invoke(runner, "stats", "curve", "--points", pts, "--target", "2").stdout)
    assert data["required_n"] is None and not data["reachable"]
    pts.write_text("[[100, 0.7]]")
    assert invoke(runner, "stats", "curve", "--points", pts).exit_code == 2


def test_catalog_export_is_deterministic(runner, tmp_path):
    a = invoke(runner, "catalog", "export").stdout_bytes
    b = invoke(runner, "catalog", "export").stdout_bytes
    assert a == b == export_catalog().encode("utf-8")
    invoke(runner, "catalog", "export", "-o", tmp_path / "c.json")
    assert (tmp_path / "c.json").read_bytes() == a


def test_main_entry_point(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["stats", "sample-size", "--epsilon", "0.05"])
    assert exc.value.code == 0
    assert json.loads(capsys.readouterr().out)["n"] == 385


def test_unwritable_output_exits_two(runner, toy_copy, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    result = invoke(runner, "validate", toy_copy, "-o", blocker / "out.md")
    assert result.exit_code == 2
