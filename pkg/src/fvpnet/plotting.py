"""SVG figures rendered from the CSV files alone (never from live simulation objects)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .output import read_mean_square_csv, read_trajectory_csv  # noqa: E402

_RC = {
    "svg.hashsalt": "fvpnet",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "figure.figsize": (6.0, 3.7),
    "lines.linewidth": 1.0,
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_trajectory_csv(csv_path, out_dir, prefix: str = "") -> list[Path]:
    """Per-coordinate traces, 2D paths and the error curve."""
    data = read_trajectory_csv(csv_path)
    out_dir = Path(out_dir)
    written = []
    with plt.rc_context(_RC):
        if "states" in data and len(data["states"]):
            st, X = data["state_t"], data["states"]
            n = X.shape[2]
            for k in range(n):
                fig, ax = plt.subplots()
                ax.plot(st, X[:, :, k])
                ax.set_xlabel("t")
                ax.set_ylabel(f"$x_i^{{{k + 1}}}$")
                ax.set_xscale("symlog", linthresh=10)
                written.append(_save(fig, out_dir / f"{prefix}coord{k + 1}.svg"))
            if n >= 2:
                fig, ax = plt.subplots(figsize=(4.5, 4.5))
                ax.plot(X[:, :, 0], X[:, :, 1], lw=0.8)
                ax.plot(X[0, :, 0], X[0, :, 1], "o", mfc="none", color="k", ms=5)
                ax.plot(X[-1, :, 0], X[-1, :, 1], "x", color="r", ms=6)
                ax.set_xlabel("$x^1$")
                ax.set_ylabel("$x^2$")
                ax.set_aspect("equal", adjustable="datalim")
                written.append(_save(fig, out_dir / f"{prefix}path2d.svg"))
        fig, ax = plt.subplots()
        err = np.asarray(data["e_t"])
        ax.plot(data["t"], err, color="k")
        ax.set_xlabel("t")
        ax.set_ylabel("$e_t$")
        if np.all(err > 0):
            ax.set_yscale("log")
        written.append(_save(fig, out_dir / f"{prefix}error.svg"))
    return written


def plot_mean_square_csv(csv_path, out_dir, prefix: str = "") -> Path:
    data = read_mean_square_csv(csv_path)
    t, mu, hw = data["t"], data["mean"], data["half_width"]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(t, mu, color="k")
        ax.fill_between(t, np.maximum(mu - hw, 0), mu + hw, color="0.8", lw=0)
        ax.set_xlabel("t")
        ax.set_ylabel(r"mean of $\|x_t - x^*\|^2$")
        if np.all(mu > 0):
            ax.set_yscale("log")
        return _save(fig, Path(out_dir) / f"{prefix}mean_square.svg")
