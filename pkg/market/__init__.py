from market.synth import SynthParams, synth_fundamentals, synth_market, synth_returns
from market.tables import (
    FundamentalsTable,
    PriceTable,
    read_fundamentals_csv,
    read_prices_csv,
    write_fundamentals_csv,
    write_prices_csv,
)
from market.transforms import (
    StandardStats,
    build_fundamentals_graph,
    daily_features,
    destandardize,
    fit_standardizer,
    log_returns,
    prices_from_returns,
    standardize,
)
from market.windows import Chunk, WindowPair, chunk_split, split_windows, window_dataset

__all__ = [
    "Chunk",
    "FundamentalsTable",
    "PriceTable",
    "StandardStats",
    "SynthParams",
    "WindowPair",
    "build_fundamentals_graph",
    "chunk_split",
    "daily_features",
    "destandardize",
    "fit_standardizer",
    "log_returns",
    "prices_from_returns",
    "read_fundamentals_csv",
    "read_prices_csv",
    "split_windows",
    "standardize",
    "synth_fundamentals",
    "synth_market",
    "synth_returns",
    "window_dataset",
]
