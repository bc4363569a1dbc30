"""Matplotlib renderings of run results, written next to the CSV/report output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_scalar_trajectory(states: np.ndarray, path: Path) -> Path:
    """One line per agent; spread decay is the consensus signal."""
    fig, ax = plt.subplots()
    steps = np.arange(states.shape[0])
    for agent in range(states.shape[1]):
        ax.plot(steps, states[:, agent], lw=0.8)
    ax.set_xlabel("n")
    ax.set_ylabel("state")
    ax.set_title("agent states")
    return _save(fig, path)


def plot_cs_run(z_series: np.ndarray, diameter_series: np.ndarray, path: Path) -> Path:
    fig, ax = plt.subplots()
    steps = np.arange(z_series.shape[0])
    positive = z_series > 0
    if positive.any():
        ax.semilogy(steps[positive], z_series[positive], label="velocity spread z(n)")
    else:
        ax.plot(steps, z_series, label="velocity spread z(n)")
    ax2 = ax.twinx()
    ax2.plot(steps, diameter_series, color="tab:orange", lw=0.9,
             label="position diameter")
    ax2.grid(False)
    ax.set_xlabel("n")
    ax.set_ylabel("z(n)")
    ax2.set_ylabel("diameter")
    lines, labels = ax.get_legend_handles_labels()
    l2, lab2 = ax2.get_legend_handles_labels()
    ax.legend(lines + l2, labels + lab2, loc="best")
    ax.set_title("flock contraction")
    return _save(fig, path)


def plot_residuals(per_k: dict, path: Path) -> Path:
    """Row-gap residuals against the horizon ladder, per start index."""
    fig, ax = plt.subplots()
    for k, entry in sorted(per_k.items(), key=lambda kv: int(kv[0])):
        horizons = [r["horizon"] for r in entry["residuals"]]
        gaps = [max(float(r["max_row_gap"]), 1e-17) for r in entry["residuals"]]
        ax.loglog(horizons, gaps, marker="o", ms=3, label=f"k={k}")
    ax.set_xlabel("horizon n")
    ax.set_ylabel("max pairwise row gap of A(n,k)")
    ax.legend()
    ax.set_title("backward-product convergence")
    return _save(fig, path)


def plot_interaction_totals(totals: np.ndarray, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(totals, cmap="viridis")
    fig.colorbar(im, ax=ax, label="int(i,j) at horizon")
    ax.set_xlabel("j")
    ax.set_ylabel("i")
    ax.set_title("cumulative interaction totals")
    return _save(fig, path)


def render_run_figures(ctx, report, out_dir: Path) -> list[Path]:
    """Render whatever the run produced; returns the written figure paths."""
    plt.rcParams.update(_STYLE)
    out = []
    fig_dir = Path(out_dir) / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)

    if ctx.cs_run is not None:
        out.append(plot_cs_run(ctx.cs_run.z_series, ctx.cs_run.diameter_series,
                               fig_dir / "contraction.png"))
    elif ctx.scalar_states is not None:
        out.append(plot_scalar_trajectory(ctx.scalar_states,
                                          fig_dir / "trajectory.png"))

    classify = report.analyses.get("classify")
    if isinstance(classify, dict) and "per_start_index" in classify:
        out.append(plot_residuals(classify["per_start_index"],
                                  fig_dir / "residuals.png"))

    graph = report.analyses.get("interaction-graph")
    if isinstance(graph, dict) and "totals" in graph:
        out.append(plot_interaction_totals(np.asarray(graph["totals"], dtype=float),
                                           fig_dir / "interaction_totals.png"))
    return out
