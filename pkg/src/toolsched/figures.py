"""SVG figure rendering for episode traces and training curves.

Rendering is headless and byte-deterministic: the Agg backend, a pinned SVG
hash salt, and a stripped Date field mean the same inputs always produce the
same file.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg", force=True)
matplotlib.rcParams["svg.hashsalt"] = "toolsched"

import matplotlib.pyplot as plt
from matplotlib.lines import Line2D
from matplotlib.patches import Circle

from .learner import CurveRow
from .trace import TraceRecord
from .world import ToolKind, WorldConfig

__all__ = ["render_trajectory", "render_curves"]

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}

_KIND_COLOR = {ToolKind.STANDARD: "#2a9d8f", ToolKind.SEMANTIC: "#9b5de5"}
_KIND_DASH = {ToolKind.STANDARD: "-", ToolKind.SEMANTIC: "--"}

_METHOD_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                  "#8c564b", "#e377c2"]


def _positions(records: list[TraceRecord], cfg: WorldConfig, field: str):
    xs = [cfg.start_pos[0]]
    ys = [cfg.start_pos[1]]
    for rec in records:
        x, y = getattr(rec, field)
        xs.append(x)
        ys.append(y)
    return xs, ys


def render_trajectory(cfg: WorldConfig, records: list[TraceRecord],
                      out_path: str | Path) -> Path:
    """Draw one episode: arena, server coverage, believed vs true path,
    executed tool calls (stars, colored by kind) and shield overrides (x)."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(7.2, 7.2))
    ax.set_xlim(0.0, cfg.arena_size)
    ax.set_ylim(0.0, cfg.arena_size)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")

    for server in cfg.servers:
        color = _KIND_COLOR[server.kind]
        ax.add_patch(Circle(server.position, server.range, fill=True,
                            facecolor=color, alpha=0.10, edgecolor=color,
                            linestyle=_KIND_DASH[server.kind], linewidth=1.2))
        ax.plot([server.position[0]], [server.position[1]], marker="^",
                color=color, markersize=7)
        ax.annotate(f"S{server.index}", server.position,
                    textcoords="offset points", xytext=(6, 6), fontsize=9)

    ax.add_patch(Circle(cfg.goal_pos, cfg.goal_radius, fill=False,
                        edgecolor="#444444", linewidth=1.2))
    ax.plot([cfg.start_pos[0]], [cfg.start_pos[1]], marker="o", color="#444444")
    ax.plot([cfg.goal_pos[0]], [cfg.goal_pos[1]], marker="*", color="#444444",
            markersize=11)

    bx, by = _positions(records, cfg, "pos_believed")
    tx, ty = _positions(records, cfg, "pos_true")
    ax.plot(tx, ty, color="#c44536", linewidth=1.1, label="true path")
    ax.plot(bx, by, color="#1f3a5f", linewidth=1.4, linestyle="--",
            label="believed path")

    # activation / override markers sit at the position where the decision
    # was made, i.e. the believed position at the step's start
    for k, rec in enumerate(records):
        px, py = (bx[k], by[k])
        if rec.final_activate and rec.server_index is not None:
            kind = cfg.servers[rec.server_index].kind
            ax.plot([px], [py], marker="*", markersize=13,
                    color=_KIND_COLOR[kind], markeredgecolor="black",
                    markeredgewidth=0.5, linestyle="none")
        if rec.overridden:
            ax.plot([px], [py], marker="x", markersize=8, color="black",
                    linestyle="none")

    cause = records[-1].cause if records else "Running"
    total = records[-1].cumulative_return if records else 0.0
    ax.set_title(f"{cause} after {len(records)} steps, return {total:.1f}")

    handles = [
        Line2D([], [], color="#1f3a5f", linestyle="--", label="believed path"),
        Line2D([], [], color="#c44536", label="true path"),
        Line2D([], [], color=_KIND_COLOR[ToolKind.STANDARD], marker="*",
               linestyle="none", markersize=11, label="standard call"),
        Line2D([], [], color=_KIND_COLOR[ToolKind.SEMANTIC], marker="*",
               linestyle="none", markersize=11, label="semantic call"),
        Line2D([], [], color="black", marker="x", linestyle="none",
               label="shield override"),
    ]
    ax.legend(handles=handles, loc="lower right", fontsize=8)
    fig.savefig(out_path, **_SAVE_KW)
    plt.close(fig)
    return out_path


def _nan_mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else math.nan


def render_curves(curves_by_label: dict[str, list[list[CurveRow]]],
                  baseline_means: dict[str, float] | None,
                  out_path: str | Path) -> Path:
    """Left: mean learning curve per label with a min/max band across seeds.
    Right: final mean return per label next to flat baseline levels.

    `curves_by_label` maps a label to one curve per seed; seeds may differ in
    length, the plot follows the shortest. Baselines render as dashed levels.
    """
    out_path = Path(out_path)
    baseline_means = baseline_means or {}
    fig, (ax_curve, ax_bar) = plt.subplots(
        1, 2, figsize=(11.0, 4.4), gridspec_kw={"width_ratios": [2.0, 1.0]})

    color_cycle = iter(_METHOD_COLORS)
    colors: dict[str, str] = {}
    finals: list[tuple[str, float, str]] = []

    for label, curves in curves_by_label.items():
        color = colors.setdefault(label, next(color_cycle))
        n_updates = min(len(c) for c in curves)
        steps = [curves[0][i].env_steps for i in range(n_updates)]
        per_update = [[c[i].mean_return for c in curves] for i in range(n_updates)]
        mean = [_nan_mean(v) for v in per_update]
        lo = [min(v) for v in per_update]
        hi = [max(v) for v in per_update]
        ax_curve.plot(steps, mean, color=color, linewidth=1.6, label=label)
        ax_curve.fill_between(steps, lo, hi, color=color, alpha=0.15,
                              linewidth=0.0)
        tail = mean[-5:] if len(mean) >= 5 else mean
        finals.append((label, _nan_mean(tail), color))

    for label, level in baseline_means.items():
        color = colors.setdefault(label, next(color_cycle))
        ax_curve.axhline(level, color=color, linestyle="--", linewidth=1.2,
                         label=label)
        finals.append((label, level, color))

    ax_curve.set_xlabel("environment steps")
    ax_curve.set_ylabel("mean episode return")
    ax_curve.legend(fontsize=8)
    ax_curve.grid(True, alpha=0.3)

    xs = range(len(finals))
    ax_bar.bar(xs, [f[1] for f in finals], color=[f[2] for f in finals])
    ax_bar.set_xticks(list(xs))
    ax_bar.set_xticklabels([f[0] for f in finals], rotation=30, ha="right",
                           fontsize=8)
    ax_bar.set_ylabel("final mean return")
    ax_bar.grid(True, axis="y", alpha=0.3)

    fig.tight_layout()
    fig.savefig(out_path, **_SAVE_KW)
    plt.close(fig)
    return out_path
