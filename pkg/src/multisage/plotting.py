"""Figure rendering for experiment reports.

Renders the same information as the delimited result files: AUC against the
sweep coordinate with standard-deviation error bars, one curve per mode and
edge type, plus the missing-coupling overlay for layer sweeps. Everything
writes straight to image files; no interactive backend is touched.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentResult
from .graph import GraphError

_MODE_COLORS = {"multisage": "tab:blue", "graphsage": "tab:orange"}


def _rows_for(result, mode):
    return [r for r in result.rows if r.mode == mode]


def plot_benchmark(result: ExperimentResult, path) -> None:
    """Grouped bars: intra/inter AUC per mode with error bars."""
    modes = sorted({r.mode for r in result.rows})
    metrics = [("auc_intra_mean", "auc_intra_std", "intra"),
               ("auc_inter_mean", "auc_inter_std", "inter")]
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(len(modes), 1)
    for i, mode in enumerate(modes):
        rows = _rows_for(result, mode)
        means = [np.mean([getattr(r, m) for r in rows if getattr(r, m) is not None] or [np.nan])
                 for m, _, _ in metrics]
        stds = [np.mean([getattr(r, s) for r in rows if getattr(r, s) is not None] or [0.0])
                for _, s, _ in metrics]
        x = np.arange(len(metrics)) + i * width
        ax.bar(x, means, width=width, yerr=stds, capsize=4, label=mode,
               color=_MODE_COLORS.get(mode))
    ax.set_xticks(np.arange(len(metrics)) + width * (len(modes) - 1) / 2)
    ax.set_xticklabels([label for _, _, label in metrics])
    ax.set_ylabel("AUC")
    ax.set_ylim(0.0, 1.05)
    ax.axhline(0.5, color="gray", lw=0.8, ls=":")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_layer_sweep(result: ExperimentResult, path) -> None:
    """AUC against prefix size, with the missing-coupling density overlaid."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in sorted({r.mode for r in result.rows}):
        rows = sorted(_rows_for(result, mode), key=lambda r: r.coordinate)
        xs = [r.coordinate for r in rows]
        for attr, std_attr, style, label in (
                ("auc_inter_mean", "auc_inter_std", "-", "inter"),
                ("auc_intra_mean", "auc_intra_std", "--", "intra")):
            ys = [getattr(r, attr) for r in rows]
            if all(y is None for y in ys):
                continue
            errs = [getattr(r, std_attr) or 0.0 for r in rows]
            ax.errorbar(xs, [np.nan if y is None else y for y in ys], yerr=errs,
                        fmt=style, marker="o", ms=3, capsize=3,
                        color=_MODE_COLORS.get(mode),
                        label=f"{mode} {label}")
    ax.set_xlabel("layers in prefix")
    ax.set_ylabel("AUC")
    ax.set_ylim(0.0, 1.05)
    deltas = {r.coordinate: r.delta for r in result.rows if r.delta is not None}
    if deltas:
        twin = ax.twinx()
        xs = sorted(deltas)
        twin.plot(xs, [deltas[x] for x in xs], color="tab:green", ls="-.",
                  marker="s", ms=3, label="missing couplings")
        twin.set_ylabel("missing-coupling fraction")
        twin.set_ylim(0.0, 1.05)
        twin.legend(loc="lower right")
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density_sweep(result: ExperimentResult, path, xlabel: str) -> None:
    """AUC against a log-scaled sweep coordinate (zero rendered via symlog)."""
    rows = sorted(result.rows, key=lambda r: r.coordinate)
    xs = np.array([r.coordinate for r in rows], dtype=float)
    ys = np.array([r.auc_intra_mean if r.auc_intra_mean is not None else np.nan
                   for r in rows])
    errs = np.array([r.auc_intra_std or 0.0 for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(xs, ys, yerr=errs, marker="o", ms=4, capsize=3,
                color="tab:blue")
    positive = xs[xs > 0]
    if len(positive):
        ax.set_xscale("symlog", linthresh=positive.min())
    ax.set_xlabel(xlabel)
    ax.set_ylabel("AUC")
    ax.set_ylim(0.4, 1.05)
    ax.axhline(0.5, color="gray", lw=0.8, ls=":")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_loss_history(history, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(np.arange(1, len(history) + 1), history, color="tab:blue")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss per edge")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_result(result: ExperimentResult, path) -> list:
    """Dispatch on the experiment kind; returns the written paths."""
    if result.kind == "benchmark":
        plot_benchmark(result, path)
    elif result.kind == "layer_sweep":
        plot_layer_sweep(result, path)
    elif result.kind == "er_sweep":
        plot_density_sweep(result, path, xlabel="added link fraction")
    elif result.kind == "ws_sweep":
        plot_density_sweep(result, path, xlabel="rewiring probability")
    else:
        raise GraphError(f"no figure renderer for result kind {result.kind!r}")
    return [path]
