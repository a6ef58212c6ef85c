"""Figure rendering for CLI reports.

Every figure is written to a file with the Agg backend, so rendering works
headless and the bytes are reproducible for fixed inputs. Matplotlib is
imported lazily to keep plotting-free commands fast.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_forecast(path_obj, out_path, target: str | None = None) -> None:
    """Line plot of a forecast path: one factor, or all of them."""
    plt = _pyplot()
    steps = np.arange(path_obj.horizon + 1)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    names = [target] if target else path_obj.factor_names
    for name in names:
        ax.plot(steps, path_obj.factor(name), label=name)
    ax.set_xlabel("step")
    ax.set_ylabel("factor value")
    ax.set_title("recursive forecast")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_forecast_runs(paths: list, target: str, out_path,
                       reference=None) -> None:
    """Fan of seeded noisy runs for one factor, with an optional noiseless
    reference curve."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for p in paths:
        steps = np.arange(p.horizon + 1)
        ax.plot(steps, p.factor(target), color="tab:blue", alpha=0.35, linewidth=0.9)
    if reference is not None:
        steps = np.arange(reference.horizon + 1)
        ax.plot(steps, reference.factor(target), color="black", linewidth=1.6,
                label="noiseless")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("step")
    ax.set_ylabel(target)
    ax.set_title(f"noisy forecast runs ({len(paths)} seeds)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_backtest(truth: np.ndarray, pred: np.ndarray, target: str, out_path,
                  noisy_paths: list | None = None) -> None:
    """Held-out truth against the forecast, plus optional noisy-run fan."""
    plt = _pyplot()
    steps = np.arange(1, len(truth) + 1)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if noisy_paths:
        for p in noisy_paths:
            ax.plot(steps, p.factor(target)[1:len(truth) + 1], color="tab:blue",
                    alpha=0.3, linewidth=0.8)
    ax.plot(steps, truth, color="black", linewidth=1.6, label="truth")
    ax.plot(steps, pred, color="tab:red", linewidth=1.4, label="predict")
    ax.set_xlabel("step into test segment")
    ax.set_ylabel(target)
    ax.set_title("out-of-sample forecast vs truth")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_industry(trend, out_path) -> None:
    """Actual curve in red, expected continuation in blue."""
    plt = _pyplot()
    n_actual = len(trend.actual)
    x_actual = np.arange(n_actual)
    x_expected = np.arange(n_actual, n_actual + len(trend.expected))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(x_actual, trend.actual, color="tab:red", linewidth=1.4, label="actual")
    if len(trend.expected):
        # join the curves visually at the last actual point
        ax.plot(np.concatenate(([x_actual[-1]], x_expected)),
                np.concatenate(([trend.actual[-1]], trend.expected)),
                color="tab:blue", linewidth=1.4, label="expected")
    ax.axvline(n_actual - 1, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xlabel("trading day")
    ax.set_ylabel(f"aggregate {trend.industry_name} signal")
    ax.set_title(f"{trend.industry_name}: actual vs expected trend")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
