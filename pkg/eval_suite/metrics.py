# eval_suite/metrics.py
"""
Ensemble forecast scores.

Trajectory arrays are n_traj x T_h x N and targets T_h x N. With
``cumulative=True`` (the default) both are turned into cumulative log
returns along the day axis before scoring, which is the scale forecasts
are plotted on; pass ``cumulative=False`` for per-day scores.
"""
from __future__ import annotations

import numpy as np

from diffusion.ensemble import ForecastEnsemble
from errors import ArgumentError, StructuralError

DEFAULT_ALPHA = 0.05
METRICS = ("RMSE", "MAE", "CRPS", "MIS")


def _prepare(trajs, target, cumulative: bool) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(trajs, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if x.ndim == y.ndim:
        x = x[None]
    if x.shape[0] < 1:
        raise ArgumentError("empty ensemble")
    if x.shape[1:] != y.shape:
        raise StructuralError(f"trajectories {x.shape} do not match target {y.shape}")
    if cumulative and y.ndim >= 1:
        x = np.cumsum(x, axis=1)
        y = np.cumsum(y, axis=0)
    return x, y


# ─────────── point scores on the ensemble mean ────────────────────────────
def rmse(trajs, target, cumulative: bool = True) -> float:
    x, y = _prepare(trajs, target, cumulative)
    return float(np.sqrt(np.mean((x.mean(axis=0) - y) ** 2)))


def mae(trajs, target, cumulative: bool = True) -> float:
    x, y = _prepare(trajs, target, cumulative)
    return float(np.mean(np.abs(x.mean(axis=0) - y)))


# ─────────── CRPS ─────────────────────────────────────────────────────────
def crps_ensemble(samples, y):
    """
    Empirical-CDF CRPS, mean|x_i - y| - 0.5 mean_{i,j}|x_i - x_j|.

    ``samples`` has the ensemble on axis 0; ``y`` matches the trailing
    shape. Returns one score per cell (a float for scalar ``y``).
    """
    x = np.asarray(samples, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 0 or x.shape[0] < 1:
        raise ArgumentError("CRPS needs at least one sample")
    n = x.shape[0]
    spread_to_obs = np.mean(np.abs(x - y), axis=0)
    s = np.sort(x, axis=0)
    # sum_{i,j} |x_i - x_j| = 2 sum_i (2i - n + 1) x_(i); centred on the
    # minimum so a collapsed ensemble gives exactly zero spread
    w = (2.0 * np.arange(n) - n + 1.0).reshape((n,) + (1,) * (x.ndim - 1))
    pair_sum = 2.0 * np.sum(w * (s - s[0]), axis=0)
    score = spread_to_obs - 0.5 * pair_sum / (n * n)
    return float(score) if np.ndim(score) == 0 else score


def crps(trajs, target, cumulative: bool = True) -> float:
    """CRPS averaged over (day, node)."""
    x, y = _prepare(trajs, target, cumulative)
    return float(np.mean(crps_ensemble(x, y)))


# ─────────── interval score ───────────────────────────────────────────────
def interval_score(lower, upper, y, alpha: float = DEFAULT_ALPHA):
    """(u - l) + (2/alpha)(l - y)_+ + (2/alpha)(y - u)_+."""
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    penalty = (2.0 / alpha) * (np.maximum(lower - y, 0.0) + np.maximum(y - upper, 0.0))
    score = (upper - lower) + penalty
    return float(score) if np.ndim(score) == 0 else score


def prediction_interval(samples, alpha: float = DEFAULT_ALPHA) -> tuple[np.ndarray, np.ndarray]:
    """Empirical alpha/2 and 1 - alpha/2 quantiles along axis 0 (linear interpolation)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[0] < 2:
        raise ArgumentError(f"prediction intervals need >= 2 samples, got {x.shape[0]}")
    lo, hi = np.quantile(x, [alpha / 2.0, 1.0 - alpha / 2.0], axis=0, method="linear")
    return lo, hi


def mis(trajs, target, alpha: float = DEFAULT_ALPHA, cumulative: bool = True) -> float:
    """Mean interval score of the central (1 - alpha) ensemble interval."""
    x, y = _prepare(trajs, target, cumulative)
    lo, hi = prediction_interval(x, alpha)
    return float(np.mean(interval_score(lo, hi, y, alpha)))


def ensemble_scores(ens: ForecastEnsemble, alpha: float = DEFAULT_ALPHA, cumulative: bool = True) -> dict[str, float]:
    if ens.target is None:
        raise ArgumentError(f"window {ens.window_id} has no realized target to score against")
    scores = {
        "RMSE": rmse(ens.trajs, ens.target, cumulative),
        "MAE": mae(ens.trajs, ens.target, cumulative),
        "CRPS": crps(ens.trajs, ens.target, cumulative),
    }
    if ens.n_traj >= 2:
        scores["MIS"] = mis(ens.trajs, ens.target, alpha, cumulative)
    return scores
