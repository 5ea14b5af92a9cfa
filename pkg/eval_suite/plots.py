# eval_suite/plots.py
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from diffusion.ensemble import ForecastEnsemble  # noqa: E402
from eval_suite.fan_chart import (  # noqa: E402
    GRW_BAND,
    HISTORY_COLOUR,
    N_SHOWN,
    REALIZED_COLOUR,
    TRAJ_COLOUR,
    FanData,
    fan_data,
)

SVG_SALT = "ugnn-fan"


def _rgba(css: str) -> tuple[float, float, float, float]:
    r, g, b, a = (float(v) for v in css[css.index("(") + 1 : -1].split(","))
    return r / 255.0, g / 255.0, b / 255.0, a


def draw_fan(ax, data: FanData) -> None:
    if data.grw_band is not None:
        ax.fill_between(data.days, *data.grw_band, color=_rgba(GRW_BAND), lw=0, label="GRW 95%")
    ax.fill_between(data.days, *data.band, color=TRAJ_COLOUR, alpha=0.25, lw=0, label="U-GNN 95%")
    for i, path in enumerate(data.shown):
        ax.plot(data.days, path, ls="--", lw=0.8, color=TRAJ_COLOUR, label="samples" if i == 0 else None)
    if data.history is not None:
        ax.plot(data.history_days, data.history, color=HISTORY_COLOUR, lw=1.5, label="history")
    if data.realized is not None:
        ax.plot(data.days, data.realized, color=REALIZED_COLOUR, lw=1.5, label="realized")
    ax.axvline(-0.5, color="0.6", lw=0.5)
    ax.set_xlabel("day")
    ax.set_ylabel("cumulative log return")


def save_fan_svg(
    path: str | Path,
    ens: ForecastEnsemble,
    nodes: list[int],
    grw: ForecastEnsemble | None = None,
    n_shown: int = N_SHOWN,
    labels: list[str] | None = None,
) -> None:
    """One panel per node; identical inputs give byte-identical SVG."""
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, axes = plt.subplots(len(nodes), 1, figsize=(7, 2.6 * len(nodes)), squeeze=False)
        for ax, node in zip(axes[:, 0], nodes):
            draw_fan(ax, fan_data(ens, node, grw, n_shown))
            ax.set_title(labels[node] if labels else f"stock {node}", fontsize=10)
        axes[0, 0].legend(loc="upper left", fontsize=7, ncol=3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
