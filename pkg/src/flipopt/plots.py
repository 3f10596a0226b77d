"""Figure rendering for study results, written next to the delimited output.

Each study gets one figure in the feasibility-versus-objective plane the
experiments are usually read in; values are averaged over replications per
grid point.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ResultsTable

_MARKERS = ["o", "s", "^", "D", "v", "P", "X", "*"]


def _mean(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def _group_means(rows, keys, fields):
    grouped = defaultdict(list)
    for row in rows:
        grouped[tuple(row.get(k) for k in keys)].append(row)
    return {
        key: {f: _mean(r.get(f) for r in members) for f in fields}
        for key, members in grouped.items()
    }


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_delta_sweep(table: ResultsTable, path) -> None:
    robust = [r for r in table.rows if r.get("kind") == "robust" and r.get("status") == "optimal"]
    baseline = [r for r in table.rows if r.get("kind") == "deterministic"]
    fig, ax = _new_axes("Slack sweep", "mean objective ratio", "feasibility level")
    by_u = _group_means(robust, ("u", "delta"), ("mean_ratio", "feasibility"))
    u_values = sorted({k[0] for k in by_u})
    for iu, u in enumerate(u_values):
        pts = sorted((k[1], v) for k, v in by_u.items() if k[0] == u)
        xs = [v["mean_ratio"] for _, v in pts]
        ys = [v["feasibility"] for _, v in pts]
        ax.plot(xs, ys, marker=_MARKERS[iu % len(_MARKERS)], label=f"u={u:g}")
    base = _group_means(baseline, ("u",), ("mean_ratio", "feasibility"))
    ax.scatter(
        [v["mean_ratio"] for v in base.values()],
        [v["feasibility"] for v in base.values()],
        color="black", marker="o", s=60, label="deterministic", zorder=5,
    )
    ax.legend()
    _save(fig, path)


def plot_cc_sweep(table: ResultsTable, path) -> None:
    robust = [r for r in table.rows if r.get("kind") == "robust" and r.get("status") == "optimal"]
    baseline = [r for r in table.rows if r.get("kind") == "deterministic"]
    fig, ax = _new_axes("Budget/slack sweep", "mean objective ratio", "feasibility level")
    by_p = _group_means(robust, ("p", "delta"), ("mean_ratio", "feasibility"))
    p_values = sorted({k[0] for k in by_p})
    for ip, p in enumerate(p_values):
        pts = sorted((k[1], v) for k, v in by_p.items() if k[0] == p)
        xs = [v["mean_ratio"] for _, v in pts]
        ys = [v["feasibility"] for _, v in pts]
        ax.plot(xs, ys, marker=_MARKERS[ip % len(_MARKERS)], label=f"p={p:g}")
    base = _group_means(baseline, ("u",), ("mean_ratio", "feasibility"))
    ax.scatter(
        [v["mean_ratio"] for v in base.values()],
        [v["feasibility"] for v in base.values()],
        color="black", marker="o", s=60, label="deterministic", zorder=5,
    )
    ax.legend()
    _save(fig, path)


def plot_selection_study(table: ResultsTable, path) -> None:
    rows = [r for r in table.rows if r.get("status") == "optimal"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.8))
    for ax, xfield, xlabel in (
        (ax1, "prescribed_ratio", "prescribed objective ratio"),
        (ax2, "prescribed_violation", "prescribed violation level"),
    ):
        ax.set_xlabel(xlabel)
        ax.set_ylabel("implemented feasibility")
        ax.grid(True, alpha=0.3)
        groups = _group_means(
            rows, ("model", "selector"), (xfield, "feasibility", "mean_ratio")
        )
        for idx, ((model, selector), vals) in enumerate(sorted(groups.items(), key=str)):
            label = model if selector is None else f"{model}/{selector}"
            ax.scatter(
                [vals[xfield]], [vals["feasibility"]],
                marker=_MARKERS[idx % len(_MARKERS)], label=label,
            )
        ax.legend(fontsize=7)
    _save(fig, path)


def plot_bound_study(table: ResultsTable, path) -> None:
    fig, ax = _new_axes(
        "Failure probability: bound vs observed", "uncertain share u", "probability"
    )
    groups = _group_means(table.rows, ("p", "u"), ("theoretical", "empirical"))
    p_values = sorted({k[0] for k in groups})
    for ip, p in enumerate(p_values):
        pts = sorted((k[1], v) for k, v in groups.items() if k[0] == p)
        us = [u for u, _ in pts]
        ax.plot(us, [v["theoretical"] for _, v in pts],
                marker=_MARKERS[ip % len(_MARKERS)], label=f"bound p={p:g}")
        ax.plot(us, [v["empirical"] for _, v in pts], linestyle="--",
                marker=_MARKERS[ip % len(_MARKERS)], label=f"observed p={p:g}")
    ax.legend()
    _save(fig, path)


PLOTTERS = {
    "delta": plot_delta_sweep,
    "cc": plot_cc_sweep,
    "selection": plot_selection_study,
    "bound": plot_bound_study,
}
