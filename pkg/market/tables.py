# market/tables.py
"""Price and fundamentals tables plus their CSV layouts."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from errors import DataError

logger = logging.getLogger(__name__)

PRICE_COLUMNS = ("date", "ticker", "adj_close")


@dataclass
class PriceTable:
    """
    Adjusted close prices, days x N, plus optional volumes and extra
    per-day features (days x N x U).
    """

    tickers: list[str]
    dates: pd.DatetimeIndex
    prices: np.ndarray
    volumes: np.ndarray | None = None
    features: np.ndarray | None = None

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=np.float64)
        self.dates = pd.DatetimeIndex(self.dates)
        days, n = self.prices.shape
        if len(self.tickers) != n or len(self.dates) != days:
            raise DataError(
                f"price matrix {self.prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not self.dates.is_monotonic_increasing or self.dates.has_duplicates:
            raise DataError("dates must be strictly increasing")
        if np.isnan(self.prices).any():
            raise DataError("price table has missing cells")
        bad = np.argwhere(self.prices <= 0)
        if bad.size:
            d, i = bad[0]
            raise DataError(
                f"non-positive price {self.prices[d, i]} for {self.tickers[i]} on {self.dates[d].date()}"
            )
        if self.volumes is not None:
            self.volumes = np.asarray(self.volumes, dtype=np.float64)
            if self.volumes.shape != self.prices.shape:
                raise DataError("volume matrix must match the price matrix")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float64)
            if self.features.ndim != 3 or self.features.shape[:2] != self.prices.shape:
                raise DataError("features must be days x N x U")

    @property
    def n_days(self) -> int:
        return self.prices.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.prices.shape[1]


@dataclass
class FundamentalsTable:
    """Long-term indicators, N x M, with the column names kept."""

    tickers: list[str]
    columns: list[str]
    indicators: np.ndarray

    def __post_init__(self):
        self.indicators = np.asarray(self.indicators, dtype=np.float64)
        if self.indicators.shape != (len(self.tickers), len(self.columns)):
            raise DataError(
                f"indicators {self.indicators.shape} do not match "
                f"{len(self.tickers)} tickers x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(self.indicators)):
            raise DataError("fundamentals must be finite after imputation")
        if len(self.columns) < 2:
            raise DataError("fundamentals need at least two indicators")

    def reindexed(self, tickers: list[str]) -> "FundamentalsTable":
        """Rows reordered to ``tickers``."""
        pos = {t: i for i, t in enumerate(self.tickers)}
        missing = [t for t in tickers if t not in pos]
        if missing:
            raise DataError(f"no fundamentals for {missing}")
        rows = [pos[t] for t in tickers]
        return FundamentalsTable(list(tickers), list(self.columns), self.indicators[rows])


# ─────────── prices CSV ───────────────────────────────────────────────────
def read_prices_csv(path: str | Path) -> PriceTable:
    """
    Read a long ``date,ticker,adj_close,volume,...`` file.

    Gaps are forward-filled per ticker; leading dates where some ticker has
    not started trading yet are dropped.
    """
    try:
        frame = pd.read_csv(path, parse_dates=["date"])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    missing = [c for c in PRICE_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    frame["ticker"] = frame["ticker"].astype(str)
    if frame.duplicated(["date", "ticker"]).any():
        raise DataError(f"{path}: duplicate (date, ticker) rows")

    prices = frame.pivot(index="date", columns="ticker", values="adj_close").sort_index()
    tickers = list(prices.columns)
    volumes = None
    if "volume" in frame.columns:
        volumes = frame.pivot(index="date", columns="ticker", values="volume").sort_index()[tickers]

    gaps = int(prices.isna().sum().sum())
    prices = prices.ffill()
    leading = prices.isna().any(axis=1)
    if leading.any():
        late = [t for t in tickers if prices[t].isna().any()]
        logger.warning("dropping %d leading dates before %s start trading", int(leading.sum()), late)
        prices = prices[~leading]
    if gaps:
        logger.warning("forward-filled price gaps (%d missing cells before fill)", gaps)
    if prices.empty:
        raise DataError(f"{path}: no date has prices for every ticker")

    vol_arr = None
    if volumes is not None:
        volumes = volumes.ffill().loc[prices.index].fillna(0.0)
        vol_arr = volumes.to_numpy(dtype=np.float64)
    return PriceTable(tickers, prices.index, prices.to_numpy(dtype=np.float64), vol_arr)


def write_prices_csv(path: str | Path, table: PriceTable) -> None:
    day_idx, node_idx = np.meshgrid(np.arange(table.n_days), np.arange(table.n_stocks), indexing="ij")
    frame = pd.DataFrame({
        "date": table.dates[day_idx.ravel()].strftime("%Y-%m-%d"),
        "ticker": np.asarray(table.tickers)[node_idx.ravel()],
        "adj_close": table.prices.ravel(),
    })
    if table.volumes is not None:
        frame["volume"] = table.volumes.ravel()
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


# ─────────── fundamentals CSV ─────────────────────────────────────────────
def read_fundamentals_csv(path: str | Path) -> FundamentalsTable:
    """
    Read ``ticker,<indicator>...``.

    Categorical columns (e.g. sector) become one-hot indicator columns;
    missing numeric cells take the column median.
    """
    frame = pd.read_csv(path)
    if "ticker" not in frame.columns:
        raise DataError(f"{path}: missing 'ticker' column")
    frame["ticker"] = frame["ticker"].astype(str)
    if frame["ticker"].duplicated().any():
        raise DataError(f"{path}: duplicate tickers")
    body = frame.drop(columns="ticker")

    numeric = body.select_dtypes(include="number")
    categorical = body.drop(columns=numeric.columns)
    if numeric.isna().any().any():
        logger.warning("imputing %d missing fundamentals with column medians", int(numeric.isna().sum().sum()))
        numeric = numeric.fillna(numeric.median())
    parts = [numeric.astype(np.float64)]
    if not categorical.empty:
        parts.append(pd.get_dummies(categorical.astype(str), dtype=np.float64))
    table = pd.concat(parts, axis=1)
    return FundamentalsTable(list(frame["ticker"]), [str(c) for c in table.columns], table.to_numpy())


def write_fundamentals_csv(path: str | Path, table: FundamentalsTable) -> None:
    frame = pd.DataFrame(table.indicators, columns=table.columns)
    frame.insert(0, "ticker", table.tickers)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
