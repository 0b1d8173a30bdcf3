"""Render figures from a written report directory.

Reads `curves.csv` and `summary.json` produced by the harness and writes PNG
files next to them. Import stays cheap: matplotlib loads on first render and
uses the Agg backend so no display is needed.
"""

from __future__ import annotations

import json
from pathlib import Path

from .harness import read_curves


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_report_figures(out_dir: str | Path) -> list[Path]:
    """Write propensity/regret figures beside the delimited output."""
    out = Path(out_dir)
    curves = read_curves(out / "curves.csv")
    with (out / "summary.json").open() as fh:
        summary = json.load(fh)
    written = [
        _propensity_figure(out, curves, summary),
        _regret_figure(out, curves),
    ]
    group_names = [k[len("mean_regret_"):] for k in curves
                   if k.startswith("mean_regret_")]
    if group_names:
        written.append(_group_regret_figure(out, curves, summary, group_names))
    return [p for p in written if p is not None]


def _propensity_figure(out: Path, curves, summary) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curves["t"], curves["mean_propensity"], lw=1.5,
            label="mean treatment propensity")
    p_star = summary.get("p_star")
    if p_star is not None:
        ax.axhline(p_star, color="crimson", ls="--", lw=1.0,
                   label=f"variance-optimal p* = {p_star:.4f}")
    ax.set_xlabel("round t")
    ax.set_ylabel("propensity")
    ax.set_xscale("log")
    ax.set_ylim(0.0, 1.0)
    ax.legend(frameon=False)
    ax.set_title("Treatment propensity over time")
    fig.tight_layout()
    path = out / "propensity.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _regret_figure(out: Path, curves) -> Path | None:
    if "mean_regret" not in curves:
        return None
    plt = _pyplot()
    t = curves["t"]
    mean = curves["mean_regret"]
    se = curves["se_regret"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(t, mean, lw=1.5)
    ax1.fill_between(t, mean - 2 * se, mean + 2 * se, alpha=0.25, lw=0)
    ax1.set_xlabel("round t")
    ax1.set_ylabel("cumulative variance regret")
    ax1.set_xscale("log")
    ax1.set_title("Design regret vs. best fixed propensity")
    ax2.plot(t, mean / t, lw=1.5)
    ax2.set_xlabel("round t")
    ax2.set_ylabel("regret / t")
    ax2.set_xscale("log")
    ax2.set_title("Per-round regret (variance gap)")
    fig.tight_layout()
    path = out / "regret.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _group_regret_figure(out: Path, curves, summary, names) -> Path:
    plt = _pyplot()
    t = curves["t"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in names:
        mean = curves[f"mean_regret_{name}"]
        se = curves[f"se_regret_{name}"]
        line, = ax.plot(t, mean, lw=1.5, label=name)
        ax.fill_between(t, mean - 2 * se, mean + 2 * se,
                        alpha=0.2, lw=0, color=line.get_color())
    ax.set_xlabel("round t")
    ax.set_ylabel("cumulative variance regret")
    ax.set_xscale("log")
    ax.legend(frameon=False, title="group")
    ax.set_title("Per-group regret")
    fig.tight_layout()
    path = out / "group_regret.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
