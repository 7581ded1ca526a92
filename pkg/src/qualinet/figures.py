"""Matplotlib renderings of scenario, comparison and sensitivity reports.

Charts are written next to the delimited outputs when the CLI is invoked
with --figures; nothing here feeds back into the numeric pipeline.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import CompareReport, ScenarioReport, SensitivityReport
from .network import CompiledNetwork

__all__ = ["compare_figure", "scenario_figure", "tornado_figure"]

_BAR_COLORS = ("#2a9d8f", "#4a6fa5", "#e9c46a", "#e76f51")


def _grid(n: int) -> tuple[int, int]:
    cols = 3 if n > 4 else 2 if n > 1 else 1
    rows = (n + cols - 1) // cols
    return rows, cols


def scenario_figure(net: CompiledNetwork, report: ScenarioReport, path: str | Path) -> Path:
    """One posterior bar chart per node, with moments on indicator panels."""
    nodes = list(net.nodes)
    rows, cols = _grid(len(nodes))
    fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 2.6 * rows), squeeze=False)
    for ax in axes.flat[len(nodes):]:
        ax.axis("off")
    for ax, node in zip(axes.flat, nodes):
        probs = report.posteriors[node.id]
        ax.bar(range(len(probs)), probs, color=_BAR_COLORS[0])
        ax.set_xticks(range(len(probs)))
        ax.set_xticklabels(node.states, rotation=30, ha="right", fontsize=7)
        ax.set_ylim(0, 1)
        title = node.id
        if node.id in report.moments:
            mean, sd = report.moments[node.id]
            title += f"  ({mean:.3g} ± {sd:.3g})"
        if node.id in report.evidence:
            title += "  [observed]"
        ax.set_title(title, fontsize=9)
    fig.suptitle(f"scenario: {report.scenario or '(none)'}", fontsize=11)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    out = Path(path)
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return out


def compare_figure(net: CompiledNetwork, report: CompareReport, path: str | Path) -> Path:
    """Grouped posterior bars per node, one bar group per scenario."""
    nodes = list(net.nodes)
    rows, cols = _grid(len(nodes))
    fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 2.6 * rows), squeeze=False)
    for ax in axes.flat[len(nodes):]:
        ax.axis("off")
    n_scenarios = len(report.reports)
    width = 0.8 / n_scenarios
    for ax, node in zip(axes.flat, nodes):
        for i, rep in enumerate(report.reports):
            probs = rep.posteriors[node.id]
            xs = [s + (i - (n_scenarios - 1) / 2) * width for s in range(len(probs))]
            ax.bar(xs, probs, width=width, color=_BAR_COLORS[i % len(_BAR_COLORS)],
                   label=report.scenarios[i])
        ax.set_xticks(range(len(node.states)))
        ax.set_xticklabels(node.states, rotation=30, ha="right", fontsize=7)
        ax.set_ylim(0, 1)
        ax.set_title(node.id, fontsize=9)
    handles, labels = axes.flat[0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="lower right", fontsize=8)
    fig.suptitle(" vs ".join(report.scenarios), fontsize=11)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    out = Path(path)
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return out


def tornado_figure(report: SensitivityReport, path: str | Path) -> Path:
    """Horizontal swing bars around the baseline, widest on top."""
    rows = list(report.rows)
    fig, ax = plt.subplots(figsize=(6.5, 1.0 + 0.55 * max(len(rows), 1)))
    ys = range(len(rows))
    ax.barh(
        [len(rows) - 1 - y for y in ys],
        [r.high - r.low for r in rows],
        left=[r.low for r in rows],
        color=_BAR_COLORS[1],
        height=0.55,
    )
    ax.axvline(report.baseline, color="#333333", linewidth=1, linestyle="--")
    ax.set_yticks([len(rows) - 1 - y for y in ys])
    ax.set_yticklabels([r.node for r in rows], fontsize=8)
    label = (
        f"P({report.target}={report.target_state})"
        if report.mode == "probability"
        else f"posterior mean of {report.target}"
    )
    ax.set_xlabel(label, fontsize=9)
    ax.set_title("sensitivity swings", fontsize=11)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return out
