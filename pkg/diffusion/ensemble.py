# diffusion/ensemble.py
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from errors import DataError, StructuralError

TARGET_ID = -1
HISTORY_ID = -2
COLUMNS = ["window_id", "traj_id", "day", "node_id", "value"]


@dataclass
class ForecastEnsemble:
    """
    Sampled future trajectories for one conditioning window.

    ``trajs`` is n_traj x T_h x N; ``target`` (T_h x N) is the realized
    path and ``history`` (T_p x N) the conditioning log returns, both
    optional.
    """

    trajs: np.ndarray
    target: np.ndarray | None = None
    history: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.trajs = np.asarray(self.trajs, dtype=np.float64)
        if self.trajs.ndim != 3 or self.trajs.shape[0] < 1:
            raise StructuralError(f"trajs must be n_traj x T_h x N, got {self.trajs.shape}")
        if not np.all(np.isfinite(self.trajs)):
            raise DataError("ensemble holds non-finite values")
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=np.float64)
            if self.target.shape != self.trajs.shape[1:]:
                raise StructuralError(
                    f"target {self.target.shape} does not match trajectories {self.trajs.shape[1:]}"
                )
        if self.history is not None:
            self.history = np.asarray(self.history, dtype=np.float64)
            if self.history.ndim != 2 or self.history.shape[1] != self.n_nodes:
                raise StructuralError(f"history must be T_p x {self.n_nodes}")

    @property
    def n_traj(self) -> int:
        return self.trajs.shape[0]

    @property
    def horizon(self) -> int:
        return self.trajs.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.trajs.shape[2]

    @property
    def window_id(self) -> int:
        return int(self.meta.get("window_id", 0))

    def mean_path(self) -> np.ndarray:
        return self.trajs.mean(axis=0)


# ─────────── CSV exchange ─────────────────────────────────────────────────
def _long_rows(window_id: int, traj_id: int, block: np.ndarray, first_day: int) -> pd.DataFrame:
    days, nodes = block.shape
    day_idx, node_idx = np.meshgrid(np.arange(days) + first_day, np.arange(nodes), indexing="ij")
    return pd.DataFrame({
        "window_id": window_id,
        "traj_id": traj_id,
        "day": day_idx.ravel(),
        "node_id": node_idx.ravel(),
        "value": block.ravel(),
    })


def ensembles_to_frame(ensembles: Sequence[ForecastEnsemble]) -> pd.DataFrame:
    frames = []
    for ens in ensembles:
        wid = ens.window_id
        if ens.history is not None:
            frames.append(_long_rows(wid, HISTORY_ID, ens.history, -ens.history.shape[0]))
        if ens.target is not None:
            frames.append(_long_rows(wid, TARGET_ID, ens.target, 0))
        for i, traj in enumerate(ens.trajs):
            frames.append(_long_rows(wid, i, traj, 0))
    if not frames:
        return pd.DataFrame(columns=COLUMNS)
    return pd.concat(frames, ignore_index=True)[COLUMNS]


def write_ensembles(path: str | Path, ensembles: Sequence[ForecastEnsemble]) -> None:
    ensembles_to_frame(ensembles).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def _block(group: pd.DataFrame, n_nodes: int) -> np.ndarray:
    grid = group.pivot(index="day", columns="node_id", values="value").sort_index()
    grid = grid.reindex(columns=range(n_nodes))
    if grid.isna().to_numpy().any():
        raise DataError("ensemble CSV has missing (day, node) cells")
    return grid.to_numpy(dtype=np.float64)


def frame_to_ensembles(frame: pd.DataFrame) -> list[ForecastEnsemble]:
    missing = set(COLUMNS) - set(frame.columns)
    if missing:
        raise DataError(f"ensemble CSV lacks columns {sorted(missing)}")
    out = []
    for wid, window in frame.groupby("window_id", sort=True):
        n_nodes = int(window["node_id"].max()) + 1
        trajs = [
            _block(g, n_nodes)
            for tid, g in window[window["traj_id"] >= 0].groupby("traj_id", sort=True)
        ]
        if not trajs:
            raise DataError(f"window {wid} has no sampled trajectories")
        target = window[window["traj_id"] == TARGET_ID]
        history = window[window["traj_id"] == HISTORY_ID]
        out.append(ForecastEnsemble(
            np.stack(trajs),
            _block(target, n_nodes) if not target.empty else None,
            _block(history, n_nodes) if not history.empty else None,
            {"window_id": int(wid)},
        ))
    return out


def read_ensembles(path: str | Path) -> list[ForecastEnsemble]:
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    return frame_to_ensembles(frame)
