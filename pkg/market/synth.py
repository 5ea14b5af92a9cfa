# market/synth.py
"""Synthetic markets for desk-scale checks."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from errors import ArgumentError, StructuralError
from graph_core.shift import GraphShift
from market.tables import FundamentalsTable, PriceTable

logger = logging.getLogger(__name__)

PROCESSES = ("grw", "graph_var")
START_DATE = "2015-01-02"


@dataclass(frozen=True)
class SynthParams:
    mu: float = 0.0005
    sigma: float = 0.02
    rho: float = 0.4
    initial_price: float = 100.0
    log_volume_mean: float = 13.0
    log_volume_sigma: float = 0.5

    def validate(self) -> None:
        if self.sigma < 0:
            raise ArgumentError(f"sigma must be >= 0, got {self.sigma}")
        if not -1.0 < self.rho < 1.0:
            raise ArgumentError(f"|rho| must be < 1 for a stable VAR(1), got {self.rho}")
        if self.initial_price <= 0:
            raise ArgumentError("initial_price must be positive")
        if self.log_volume_sigma < 0:
            raise ArgumentError("log_volume_sigma must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def tickers_for(n_stocks: int) -> list[str]:
    return [f"S{i:03d}" for i in range(n_stocks)]


def synth_returns(
    n_stocks: int,
    steps: int,
    graph: GraphShift | None = None,
    process: str = "grw",
    params: SynthParams | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """
    steps x N log returns.

    ``grw``: r_k = mu + sigma z_k.
    ``graph_var``: r_k - mu = rho S (r_{k-1} - mu) + sigma z_k with S the
    graph shift scaled to unit spectral norm.
    """
    params = params or SynthParams()
    params.validate()
    rng = rng or np.random.default_rng(0)
    if process not in PROCESSES:
        raise ArgumentError(f"process must be one of {PROCESSES}, got {process!r}")
    noise = params.sigma * rng.standard_normal((steps, n_stocks))
    if process == "grw":
        return params.mu + noise

    if graph is None:
        raise ArgumentError("graph_var needs a graph")
    if graph.n_nodes != n_stocks:
        raise StructuralError(f"graph has {graph.n_nodes} nodes, market has {n_stocks} stocks")
    coupling = (params.rho / graph.spectral_norm) * graph.matrix
    dev = np.zeros((steps, n_stocks))
    prev = np.zeros(n_stocks)
    for k in range(steps):
        prev = coupling @ prev + noise[k]
        dev[k] = prev
    return params.mu + dev


def synth_market(
    n_stocks: int,
    days: int,
    graph: GraphShift | None = None,
    process: str = "grw",
    params: SynthParams | None = None,
    seed: int = 0,
) -> PriceTable:
    """``days`` business days of prices (and log-normal volumes) from one seed."""
    if n_stocks < 1 or days < 2:
        raise ArgumentError(f"need n_stocks >= 1 and days >= 2, got ({n_stocks}, {days})")
    params = params or SynthParams()
    rng = np.random.default_rng(seed)
    returns = synth_returns(n_stocks, days - 1, graph, process, params, rng)
    prices = params.initial_price * np.exp(
        np.vstack([np.zeros((1, n_stocks)), np.cumsum(returns, axis=0)])
    )
    volumes = np.exp(params.log_volume_mean + params.log_volume_sigma * rng.standard_normal((days, n_stocks)))
    logger.info("synthesised %s market: %d stocks x %d days (seed %d)", process, n_stocks, days, seed)
    return PriceTable(
        tickers_for(n_stocks),
        pd.bdate_range(START_DATE, periods=days),
        prices,
        volumes,
    )


def synth_fundamentals(n_stocks: int, n_indicators: int = 8, n_factors: int = 3, seed: int = 0) -> FundamentalsTable:
    """Indicators driven by a few latent factors, so stocks sharing loadings correlate."""
    if n_indicators < 2 or n_factors < 1:
        raise ArgumentError("need n_indicators >= 2 and n_factors >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    loadings = rng.standard_normal((n_stocks, n_factors))
    profile = rng.standard_normal((n_factors, n_indicators))
    indicators = loadings @ profile + 0.3 * rng.standard_normal((n_stocks, n_indicators))
    return FundamentalsTable(
        tickers_for(n_stocks), [f"ind{j:02d}" for j in range(n_indicators)], indicators
    )
