# eval_suite/grw.py
"""Geometric random walk baseline fitted on the conditioning window."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from diffusion.ensemble import ForecastEnsemble
from diffusion.process import trajectory_rng
from errors import ArgumentError, DataError


@dataclass(frozen=True, eq=False)
class GRWParams:
    drift: np.ndarray
    vol: np.ndarray

    def __post_init__(self):
        if self.drift.shape != self.vol.shape:
            raise ArgumentError("drift and vol must have one entry per stock")
        if not (np.all(np.isfinite(self.drift)) and np.all(np.isfinite(self.vol))):
            raise DataError("GRW parameters must be finite")
        if np.any(self.vol < 0):
            raise ArgumentError("GRW volatility must be non-negative")

    @property
    def n_stocks(self) -> int:
        return self.drift.shape[0]


def fit_grw(past) -> GRWParams:
    """Sample mean and unbiased sample std of T_p x N past log returns."""
    r = np.asarray(past, dtype=np.float64)
    if r.ndim == 1:
        r = r[:, None]
    if r.shape[0] < 2:
        raise ArgumentError(f"GRW fit needs T_p >= 2 days, got {r.shape[0]}")
    return GRWParams(r.mean(axis=0), r.std(axis=0, ddof=1))


def simulate_grw(params: GRWParams, t_h: int, n_traj: int, seed: int) -> np.ndarray:
    """n_traj x T_h x N i.i.d. N(drift, vol^2) daily log returns, one stream per trajectory."""
    if t_h < 1 or n_traj < 1:
        raise ArgumentError(f"need T_h >= 1 and n_traj >= 1, got ({t_h}, {n_traj})")
    out = np.empty((n_traj, t_h, params.n_stocks))
    for i in range(n_traj):
        z = trajectory_rng(seed, i).standard_normal((t_h, params.n_stocks))
        out[i] = params.drift + params.vol * z
    return out


def grw_forecast(
    history,
    t_h: int,
    n_traj: int,
    seed: int,
    target=None,
    window_id: int = 0,
) -> ForecastEnsemble:
    history = np.asarray(history, dtype=np.float64)
    trajs = simulate_grw(fit_grw(history), t_h, n_traj, seed)
    return ForecastEnsemble(trajs, target, history, {"window_id": window_id, "seed": seed, "model": "GRW"})
