"""SVG figures for CLI runs.

Plain static polyline plots; nothing here is needed by the numerical code.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.figsize": (5.0, 4.0),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "pursuit-lab",
    "svg.fonttype": "none",
}

EVADER = "tab:green"
PURSUER = "tab:red"


def _save(fig, path) -> None:
    # metadata Date=None keeps identical runs byte-identical
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_pursuit(evader: np.ndarray, pursuer: np.ndarray, path, title: str = "", reference=None) -> None:
    """Evader and pursuer paths in the plane; ``reference`` is an optional (N, 2) curve."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(evader[:, 0], evader[:, 1], color=EVADER, label="evader")
        ax.plot(pursuer[:, 0], pursuer[:, 1], color=PURSUER, label="pursuer")
        if reference is not None:
            ax.plot(reference[:, 0], reference[:, 1], color="tab:blue", ls="--", label="scaled curve")
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(title)
        ax.legend(loc="upper right", fontsize=8)
        _save(fig, path)


def plot_phase(zeta: np.ndarray, rho: np.ndarray, path, title: str = "", marks=None) -> None:
    """(zeta, rho) phase curve, zeta on the horizontal axis; ``marks`` are extra points."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(zeta, rho, color="tab:purple")
        if marks is not None and len(marks):
            m = np.asarray(marks)
            ax.plot(m[:, 0], m[:, 1], "o", ms=3, color="k")
        ax.set_xlabel(r"$\zeta$ [rad]")
        ax.set_ylabel(r"$\rho$")
        ax.set_title(title)
        _save(fig, path)


def plot_anchor_comparison(runs: dict, path, title: str = "") -> None:
    """Pursuer x-coordinate of each parameterization against t = phi - pi/2."""
    offsets = {"standard": 0.0, "angvel": 0.0, "arclen": math.pi / 2}
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for kind, run in runs.items():
            ax.plot(run.params - offsets.get(kind, 0.0), run.pursuer[:, 0], label=kind)
        for k in range(5):
            ax.axvline(k * math.pi / 2, color="0.5", ls="--", lw=0.6)
        ax.set_xlabel("t  (= phi - pi/2)")
        ax.set_ylabel("pursuer x")
        ax.set_title(title)
        ax.legend(fontsize=8)
        _save(fig, path)


def plot_series(x: np.ndarray, ys: dict, path, xlabel: str = "", title: str = "") -> None:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for label, y in ys.items():
            ax.plot(x, y, label=label)
        ax.set_xlabel(xlabel)
        ax.set_title(title)
        ax.legend(fontsize=8)
        _save(fig, path)
