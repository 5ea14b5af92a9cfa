# eval_suite/fan_chart.py
"""Data behind forecast fan charts, plus the interactive plotly rendition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import plotly.graph_objects as go

from diffusion.ensemble import ForecastEnsemble
from errors import ArgumentError
from eval_suite.metrics import prediction_interval

N_SHOWN = 10
UGNN_BAND = "rgba(39, 174, 96, 0.25)"      # green
GRW_BAND = "rgba(231, 76, 60, 0.18)"       # light red
TRAJ_COLOUR = "#27ae60"
HISTORY_COLOUR = "#000000"
REALIZED_COLOUR = "#1f5fd1"


@dataclass
class FanData:
    """Cumulative log-return paths for one stock of one window."""

    node: int
    history_days: np.ndarray
    history: np.ndarray | None
    days: np.ndarray
    shown: np.ndarray
    band: tuple[np.ndarray, np.ndarray]
    grw_band: tuple[np.ndarray, np.ndarray] | None
    realized: np.ndarray | None


def fan_data(
    ens: ForecastEnsemble,
    node: int,
    grw: ForecastEnsemble | None = None,
    n_shown: int = N_SHOWN,
    alpha: float = 0.05,
) -> FanData:
    if not 0 <= node < ens.n_nodes:
        raise ArgumentError(f"node {node} outside [0, {ens.n_nodes})")
    start = 0.0
    history = None
    history_days = np.arange(0)
    if ens.history is not None:
        history = np.cumsum(ens.history[:, node])
        history_days = np.arange(-history.shape[0], 0)
        start = float(history[-1])
    paths = start + np.cumsum(ens.trajs[:, :, node], axis=1)
    lo, hi = prediction_interval(paths, alpha) if ens.n_traj >= 2 else (paths[0], paths[0])
    grw_band = None
    if grw is not None:
        grw_paths = start + np.cumsum(grw.trajs[:, :, node], axis=1)
        grw_band = prediction_interval(grw_paths, alpha)
    realized = None if ens.target is None else start + np.cumsum(ens.target[:, node])
    return FanData(
        node=node,
        history_days=history_days,
        history=history,
        days=np.arange(ens.horizon),
        shown=paths[:n_shown],
        band=(lo, hi),
        grw_band=grw_band,
        realized=realized,
    )


def _band(fig: go.Figure, days: np.ndarray, band, colour: str, name: str) -> None:
    lo, hi = band
    fig.add_trace(go.Scatter(x=days, y=hi, mode="lines", line=dict(width=0), showlegend=False, hoverinfo="skip"))
    fig.add_trace(go.Scatter(
        x=days, y=lo, mode="lines", line=dict(width=0), fill="tonexty", fillcolor=colour, name=name,
    ))


def plotly_fan(data: FanData, title: str | None = None) -> go.Figure:
    fig = go.Figure()
    if data.grw_band is not None:
        _band(fig, data.days, data.grw_band, GRW_BAND, "GRW 95%")
    _band(fig, data.days, data.band, UGNN_BAND, "U-GNN 95%")
    for i, path in enumerate(data.shown):
        fig.add_trace(go.Scatter(
            x=data.days, y=path, mode="lines",
            line=dict(color=TRAJ_COLOUR, dash="dash", width=1),
            name="samples", legendgroup="samples", showlegend=i == 0,
        ))
    if data.history is not None:
        fig.add_trace(go.Scatter(
            x=data.history_days, y=data.history, mode="lines",
            line=dict(color=HISTORY_COLOUR, width=2), name="history",
        ))
    if data.realized is not None:
        fig.add_trace(go.Scatter(
            x=data.days, y=data.realized, mode="lines",
            line=dict(color=REALIZED_COLOUR, width=2), name="realized",
        ))
    fig.update_layout(
        title=title or f"Stock {data.node}",
        xaxis_title="day",
        yaxis_title="cumulative log return",
        margin=dict(l=10, r=10, t=40, b=10),
        legend=dict(orientation="h"),
    )
    return fig
