import pytest

from cardwright.plotting import completeness_figure, learning_curve_figure, save_figure
from cardwright.rules import validate_bundle
from cardwright.stats import fit_learning_curve, required_n

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_completeness_figure(toy_bundle, tmp_path):
    fig = completeness_figure(validate_bundle(toy_bundle))
    (ax,) = fig.axes
    assert len(ax.patches) == 5
    assert [round(p.get_width(), 6) for p in ax.patches][-1] == round(116 / 126, 6)
    path = save_figure(fig, tmp_path / "out" / "completeness.png")
    assert path.read_bytes().startswith(PNG_MAGIC)


def test_png_output_is_reproducible(toy_bundle, tmp_path):
    report = validate_bundle(toy_bundle)
    a = save_figure(completeness_figure(report), tmp_path / "a.png").read_bytes()
    b = save_figure(completeness_figure(report), tmp_path / "b.png").read_bytes()
    assert a == b


@pytest.mark.parametrize("target", [None, 0.95, 5.0])
def test_learning_curve_figure(tmp_path, target):
    fit = fit_learning_curve([(100, 0.7), (1000, 0.8), (10000, 0.9)])
    required = required_n(fit, target) if target is not None else None
    fig = learning_curve_figure(fit, target, required)
    assert fig.axes[0].get_xscale() == "log"
    assert save_figure(fig, tmp_path / "curve.png").read_bytes().startswith(PNG_MAGIC)
