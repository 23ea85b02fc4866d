"""PNG figures for run and compare outputs.

Figures are drawn on bare ``matplotlib.figure.Figure`` objects with the Agg
canvas, so nothing touches pyplot's global state and rendering is safe from
worker threads.  PNG metadata is pinned so identical traces give identical
bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .sim import VARIANTS, Comparison, ScenarioConfig, Trace, estimator_errors

_META = {"Software": None}
_STYLE = {"linewidth": 1.2}


def _figure(nrows=1, ncols=1, size=(7.0, 4.5), sharex=False):
    fig = Figure(figsize=size, dpi=100)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, sharex=sharex, squeeze=False)
    return fig, axes


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_META)
    return Path(path)


def _labels(n):
    return [f"follower {i + 1}" for i in range(n)]


def plot_paths(trace: Trace, config: ScenarioConfig, path):
    fig, ax = _figure(size=(7.0, 5.0))
    ax = ax[0, 0]
    ax.plot(trace["x_r"], trace["y_r"], "k--", label="leader", **_STYLE)
    for i, label in enumerate(_labels(trace.n)):
        line, = ax.plot(trace["x"][:, i], trace["y"][:, i], label=label, **_STYLE)
        ax.plot(trace["x"][0, i], trace["y"][0, i], "o", color=line.get_color(), ms=4)
        off = config.robots[i].offset
        ax.plot(trace["x_r"][-1] - off.dx, trace["y_r"][-1] - off.dy, "x",
                color=line.get_color(), ms=7)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"paths ({config.variant.value}); o start, x final slot")
    return _save(fig, path)


def plot_tracking(trace: Trace, path):
    fig, axes = _figure(3, 1, size=(7.0, 7.0), sharex=True)
    for ax, col, name in zip(axes[:, 0], ("ex_b", "ey_b", "eth"),
                             ("driving error [m]", "lateral error [m]", "heading error [rad]")):
        for i, label in enumerate(_labels(trace.n)):
            ax.plot(trace.t, trace[col][:, i], label=label, **_STYLE)
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def plot_estimators(trace: Trace, path):
    pose, e_alpha, e_beta = estimator_errors(trace)
    fig, axes = _figure(3, 1, size=(7.0, 7.0), sharex=True)
    floor = np.finfo(float).tiny
    for ax, err, name in zip(axes[:, 0], (pose, e_alpha, e_beta),
                             ("pose estimate error", "|v estimate error|", "|w estimate error|")):
        for i, label in enumerate(_labels(trace.n)):
            ax.semilogy(trace.t, np.maximum(err[:, i], floor), label=label, **_STYLE)
        ax.set_ylabel(name)
        ax.grid(alpha=0.3, which="both")
    axes[0, 0].legend(fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def plot_commands(trace: Trace, path):
    fig, axes = _figure(2, 1, size=(7.0, 5.5), sharex=True)
    for ax, cmd, actual, name in ((axes[0, 0], "v_cmd", "v", "v [m/s]"),
                                  (axes[1, 0], "w_cmd", "w", "w [rad/s]")):
        for i, label in enumerate(_labels(trace.n)):
            line, = ax.plot(trace.t, trace[cmd][:, i], label=f"{label} command", **_STYLE)
            ax.plot(trace.t, trace[actual][:, i], ":", color=line.get_color(), **_STYLE)
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8, title="dotted: actual")
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def plot_learning(trace: Trace, config: ScenarioConfig, path):
    fig, axes = _figure(2, 1, size=(7.0, 5.5), sharex=True)
    for ax, col, attr in ((axes[0, 0], "a_hat", "a"), (axes[1, 0], "b_hat", "b")):
        for i, label in enumerate(_labels(trace.n)):
            line, = ax.plot(trace.t, trace[col][:, i], label=label, **_STYLE)
            ax.axhline(getattr(config.robots[i].plant, attr), color=line.get_color(),
                       ls="--", lw=0.8)
        ax.set_ylabel(f"{attr} estimate")
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8, title="dashed: true value")
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def run_figures(trace: Trace, config: ScenarioConfig, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        plot_paths(trace, config, outdir / "paths.png"),
        plot_tracking(trace, outdir / "tracking_errors.png"),
        plot_estimators(trace, outdir / "estimator_errors.png"),
        plot_commands(trace, outdir / "velocity_commands.png"),
        plot_learning(trace, config, outdir / "learning.png"),
    ]


def plot_tve(comparison: Comparison, path):
    table = comparison.table
    n = table.shape[1]
    fig, ax = _figure(size=(7.0, 4.5))
    ax = ax[0, 0]
    width = 0.8 / len(VARIANTS)
    x = np.arange(n)
    for k, v in enumerate(VARIANTS):
        ax.bar(x + (k - (len(VARIANTS) - 1) / 2) * width, table[k], width, label=v.value)
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(_labels(n))
    ax.set_ylabel("total velocity error")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y", which="both")
    return _save(fig, path)


def plot_variant_commands(comparison: Comparison, path):
    n = comparison.table.shape[1]
    fig, axes = _figure(n, 1, size=(7.0, 2.4 * n + 1.0), sharex=True)
    for i in range(n):
        ax = axes[i, 0]
        for v in VARIANTS:
            tr = comparison.traces[v.value]
            ax.plot(tr.t, tr["v_cmd"][:, i], label=v.value, **_STYLE)
        ax.set_ylabel(f"v_cmd, follower {i + 1}")
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def compare_figures(comparison: Comparison, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        plot_tve(comparison, outdir / "total_velocity_error.png"),
        plot_variant_commands(comparison, outdir / "velocity_commands_by_variant.png"),
    ]
