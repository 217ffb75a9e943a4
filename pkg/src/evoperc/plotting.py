"""SVG figures for replays, evolution histories and benchmark summaries.

Figures are written with a fixed hash salt and without date metadata so
repeated runs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .arena import TileGrid  # noqa: E402

_META = {"Date": None, "Creator": "evoperc"}


def _save(fig, path: str | Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "evoperc", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_replay(grid: TileGrid, trajectory: np.ndarray, times: np.ndarray, opinions: np.ndarray,
                path: str | Path, title: str = "") -> None:
    """Arena with robot paths, and the swarm's white share over time.

    ``trajectory`` is ``(ticks + 1, N, 4)`` for one run; ``opinions`` is
    ``(samples, N)``.
    """
    fig, (ax, bx) = plt.subplots(1, 2, figsize=(10, 4.6))
    extent = grid.extent
    ax.imshow(grid.cells, cmap="gray", vmin=-0.6, vmax=1.6, origin="lower",
              extent=(0, extent, 0, grid.height_tiles * grid.tile_size), interpolation="nearest")
    final = trajectory[-1, :, 3]
    for i in range(trajectory.shape[1]):
        color = "tab:orange" if final[i] >= 0.5 else "tab:blue"
        ax.plot(trajectory[:, i, 0], trajectory[:, i, 1], lw=0.6, color=color, alpha=0.8)
        ax.plot(trajectory[-1, i, 0], trajectory[-1, i, 1], "o", ms=3, color=color)
    ax.set_xlim(0, extent)
    ax.set_ylim(0, grid.height_tiles * grid.tile_size)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("paths (orange: final White, blue: final Black)", fontsize=9)

    bx.plot(times, opinions.mean(axis=1), color="k", lw=1.2)
    bx.set_ylim(-0.02, 1.02)
    bx.set_xlabel("time [s]")
    bx.set_ylabel("share with opinion White")
    bx.grid(alpha=0.3)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)


def plot_history(generations: Sequence[int], best: Sequence[float], mean: Sequence[float],
                 path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(generations, best, label="best", color="tab:red")
    ax.plot(generations, mean, label="mean", color="tab:gray")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)


def plot_benchmark(rows, path: str | Path) -> None:
    """Grouped bars of mean consensus time and exit probability per difficulty."""
    mechanisms = list(dict.fromkeys(r.mechanism for r in rows))
    difficulties = sorted({r.difficulty for r in rows})
    lookup = {(r.mechanism, r.difficulty): r for r in rows}
    width = 0.8 / max(len(mechanisms), 1)
    fig, (ax, bx) = plt.subplots(1, 2, figsize=(10, 3.8))
    base = np.arange(len(difficulties))
    for k, mech in enumerate(mechanisms):
        t = [lookup[(mech, d)].t_bar if (mech, d) in lookup and lookup[(mech, d)].t_bar is not None
             else np.nan for d in difficulties]
        e = [lookup[(mech, d)].e_n if (mech, d) in lookup else np.nan for d in difficulties]
        ax.bar(base + k * width, t, width, label=mech)
        bx.bar(base + k * width, e, width, label=mech)
    for axis, label in ((ax, "mean consensus time [s]"), (bx, "exit probability [%]")):
        axis.set_xticks(base + width * (len(mechanisms) - 1) / 2)
        axis.set_xticklabels([f"{d:.2f}" for d in difficulties])
        axis.set_xlabel("problem difficulty")
        axis.set_ylabel(label)
        axis.grid(axis="y", alpha=0.3)
    bx.set_ylim(0, 105)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
