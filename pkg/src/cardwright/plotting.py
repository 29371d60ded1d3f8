"""Figures for the report path: per-card completeness and learning-curve fits.

Figures are built on ``matplotlib.figure.Figure`` directly so no global pyplot state
or interactive backend is involved.
"""

from __future__ import annotations

import math
from pathlib import Path

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from cardwright.rules import FindingReport
from cardwright.schema import CARD_ORDER
from cardwright.stats import CurveFit

# PNG metadata would otherwise embed the matplotlib version string
_PNG_METADATA = {"Software": None}


def completeness_figure(report: FindingReport) -> Figure:
    fig = Figure(figsize=(6.0, 3.2), layout="constrained")
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    labels = [k.title.removesuffix(" Card") for k in CARD_ORDER] + ["Overall"]
    scores = [report.per_card_scores[k] for k in CARD_ORDER] + [report.overall]
    values = [s.value for s in scores]
    colors = ["#4c72b0"] * len(CARD_ORDER) + ["#55a868"]
    bars = ax.barh(labels, values, color=colors)
    for bar, score in zip(bars, scores):
        ax.text(
            min(bar.get_width(), 1.0) + 0.01,
            bar.get_y() + bar.get_height() / 2,
            f"{score.answered}/{score.applicable}",
            va="center",
            fontsize=8,
        )
    ax.set_xlim(0, 1.15)
    ax.invert_yaxis()
    ax.set_xlabel("answered / applicable")
    ax.set_title(f"Completeness ({report.risk_decision.tier.value})")
    return fig


def learning_curve_figure(fit: CurveFit, target: float | None = None, required: float | None = None) -> Figure:
    fig = Figure(figsize=(5.0, 3.5), layout="constrained")
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    ns = [n for n, _ in fit.points]
    lo, hi = min(ns), max(ns)
    if required is not None:
        hi = max(hi, required)
    grid = [lo * (hi / lo) ** (i / 199) for i in range(200)]
    ax.plot(grid, [fit.predict(n) for n in grid], color="#4c72b0",
            label=f"{fit.a:.3g} + {fit.b:.3g} ln n")
    ax.scatter(ns, [perf for _, perf in fit.points], color="#333333", s=14, zorder=3, label="observed")
    if target is not None:
        ax.axhline(target, color="#c44e52", linestyle="--", linewidth=1, label=f"target {target:g}")
    if required is not None and math.isfinite(required):
        ax.axvline(required, color="#c44e52", linestyle=":", linewidth=1)
    ax.set_xscale("log")
    ax.set_xlabel("training samples n")
    ax.set_ylabel("performance")
    ax.legend(fontsize=8, loc="lower right")
    return fig


def save_figure(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", dpi=100, metadata=_PNG_METADATA)
    return path
