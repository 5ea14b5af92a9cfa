# market/transforms.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from errors import DataError, StructuralError
from market.tables import FundamentalsTable, PriceTable

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-8
FEATURES = ("log_return", "log_volume")


# ─────────── returns ──────────────────────────────────────────────────────
def log_returns(prices, tickers: Sequence[str] | None = None, dates=None) -> np.ndarray:
    """r[k, i] = ln(p[k+1, i] / p[k, i]) for a days x N price matrix."""
    p = np.asarray(prices, dtype=np.float64)
    if p.ndim != 2:
        raise StructuralError(f"prices must be days x N, got shape {p.shape}")
    if p.shape[0] < 2:
        raise DataError("log returns need at least two days of prices")
    bad = np.argwhere(~(p > 0))
    if bad.size:
        d, i = bad[0]
        who = tickers[i] if tickers is not None else f"column {i}"
        when = dates[d] if dates is not None else f"day {d}"
        raise DataError(f"non-positive price {p[d, i]} for {who} at {when}")
    return np.diff(np.log(p), axis=0)


def prices_from_returns(initial, returns) -> np.ndarray:
    """Inverse of ``log_returns``: cumulative exponentiation from ``initial``."""
    initial = np.asarray(initial, dtype=np.float64)
    r = np.asarray(returns, dtype=np.float64)
    path = np.vstack([np.zeros((1, r.shape[1])), np.cumsum(r, axis=0)])
    return initial[None, :] * np.exp(path)


def daily_features(table: PriceTable, columns: Sequence[str] = FEATURES) -> np.ndarray:
    """
    Per-day stock features aligned with the log returns, (days-1) x N x U.

    ``log_volume`` is the raw log of traded volume on the return's closing
    day; it gets its z-score from the training-split standardizer.
    """
    unknown = [c for c in columns if c not in FEATURES]
    if unknown:
        raise DataError(f"unknown feature columns {unknown}; choose from {FEATURES}")
    if "log_return" not in columns:
        raise DataError("the feature set must include log_return")
    parts = []
    for name in columns:
        if name == "log_return":
            parts.append(log_returns(table.prices, table.tickers, table.dates))
        else:
            if table.volumes is None:
                raise DataError("log_volume requested but the price table has no volumes")
            parts.append(np.log1p(np.maximum(table.volumes[1:], 0.0)))
    feats = np.stack(parts, axis=-1)
    if table.features is not None:
        feats = np.concatenate([feats, table.features[1:]], axis=-1)
    return feats


# ─────────── fundamentals graph ───────────────────────────────────────────
def build_fundamentals_graph(fund: FundamentalsTable | np.ndarray) -> np.ndarray:
    """
    Absolute Pearson correlation between stocks' z-scored indicator rows.

    Zero-variance indicator columns carry no information and are dropped
    before scoring. The result is symmetric, in [0, 1], with a zero diagonal.
    """
    x = fund.indicators if isinstance(fund, FundamentalsTable) else np.asarray(fund, dtype=np.float64)
    if x.ndim != 2:
        raise StructuralError(f"indicators must be N x M, got shape {x.shape}")
    std = x.std(axis=0)
    flat = std <= STD_FLOOR
    if flat.any():
        names = (
            [fund.columns[j] for j in np.flatnonzero(flat)]
            if isinstance(fund, FundamentalsTable)
            else np.flatnonzero(flat).tolist()
        )
        logger.warning("dropping zero-variance indicator columns %s", names)
    x, std = x[:, ~flat], std[~flat]
    if x.shape[1] < 2:
        raise DataError(f"need at least 2 informative indicator columns, got {x.shape[1]}")

    z = (x - x.mean(axis=0)) / std
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(z)
    corr = np.nan_to_num(np.atleast_2d(corr), nan=0.0)
    adj = np.abs(corr)
    adj = np.clip(0.5 * (adj + adj.T), 0.0, 1.0)
    np.fill_diagonal(adj, 0.0)
    return adj


# ─────────── standardization ──────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class StandardStats:
    """Per-node (and per-feature) mean and floored std over training days."""

    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "StandardStats":
        return cls(np.asarray(data["mean"], dtype=np.float64), np.asarray(data["std"], dtype=np.float64))


def fit_standardizer(x) -> StandardStats:
    """Statistics along the day axis (axis 0) of days x N or days x N x U."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 1:
        raise DataError("cannot fit a standardizer on zero days")
    return StandardStats(x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR))


def standardize(stats: StandardStats, x) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - stats.mean) / stats.std


def destandardize(stats: StandardStats, x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) * stats.std + stats.mean
