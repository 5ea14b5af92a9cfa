# trainer/pipeline.py
"""
Glue between market data, the U-GNN and the evaluation suite: windows in,
checkpoints and forecast ensembles out.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from config_handler import Settings
from diffusion.ensemble import ForecastEnsemble
from diffusion.process import sample
from diffusion.schedule import NoiseSchedule, make_schedule
from errors import DataError
from eval_suite.grw import grw_forecast
from eval_suite.report import combine, summarize
from graph_core.sampling import plan_node_counts, selections_from_kept
from graph_core.shift import GraphShift, build_shift
from market.tables import PriceTable
from market.transforms import StandardStats, daily_features, fit_standardizer, log_returns, standardize
from market.windows import WindowPair, chunk_split, split_windows
from trainer.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from trainer.train import Dataset, TrainState, train
from ugnn_model.config import UGNNConfig
from ugnn_model.model import UGNN

logger = logging.getLogger(__name__)

EXPERIMENT_SETUPS: tuple[tuple[int, int], ...] = ((20, 10), (20, 20), (5, 5), (10, 1))


# ─────────── data preparation ─────────────────────────────────────────────
@dataclass
class PreparedData:
    """
    Standardized windows for the model plus raw windows for scoring.

    Both window sets share origins, so ``windows[s][j]`` and ``raw[s][j]``
    describe the same days.
    """

    tickers: list[str]
    shift: GraphShift
    t_p: int
    t_h: int
    feature_columns: list[str]
    x_stats: StandardStats
    u_stats: StandardStats
    windows: dict[str, list[WindowPair]]
    raw: dict[str, list[WindowPair]]

    @property
    def n_features(self) -> int:
        return int(self.u_stats.mean.shape[-1])

    def dataset(self) -> Dataset:
        def examples(split):
            return [(w.future, w.past) for w in self.windows[split]]

        return Dataset(examples("train"), examples("val"))


def prepare_data(
    table: PriceTable,
    adjacency: np.ndarray,
    settings: Settings,
    stats: tuple[StandardStats, StandardStats] | None = None,
) -> PreparedData:
    """
    Returns, features and windows for every split.

    Standardization is fitted on the training days unless ``stats`` gives
    the (returns, features) pair a trained model was fitted with.
    """
    d = settings.data
    returns = log_returns(table.prices, table.tickers, table.dates)
    feats = daily_features(table, d.features)
    chunks = chunk_split(returns.shape[0], d.chunk_len, d.split_ratios, d.split_seed)
    train_days = np.concatenate([np.arange(c.start, c.stop) for c in chunks["train"]])
    if stats is None:
        x_stats = fit_standardizer(returns[train_days])
        u_stats = fit_standardizer(feats[train_days])
    else:
        x_stats, u_stats = stats
        if x_stats.mean.shape != returns.shape[1:] or u_stats.mean.shape != feats.shape[1:]:
            raise DataError("standardization stats do not match the market shape")

    windows = split_windows(
        standardize(x_stats, returns), standardize(u_stats, feats), chunks, d.t_p, d.t_h, d.stride
    )
    raw = split_windows(returns, None, chunks, d.t_p, d.t_h, d.stride)
    for split, pairs in windows.items():
        if not pairs:
            raise DataError(f"the {split} split has no windows; lower chunk_len, T_p or T_h")
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.shape != (table.n_stocks, table.n_stocks):
        raise DataError(f"adjacency {adjacency.shape} does not match {table.n_stocks} stocks")
    return PreparedData(
        list(table.tickers), build_shift(adjacency), d.t_p, d.t_h, list(d.features),
        x_stats, u_stats, windows, raw,
    )


# ─────────── model assembly ───────────────────────────────────────────────
def model_config(settings: Settings, n_nodes: int, t_p: int, t_h: int, n_features: int) -> UGNNConfig:
    m = settings.model
    if len(m.node_ratios) != m.depth:
        raise DataError(f"node_ratios needs {m.depth} entries, got {len(m.node_ratios)}")
    return UGNNConfig.halving(
        plan_node_counts(n_nodes, m.node_ratios),
        m.f0,
        target_width=t_h,
        conditioning_width=t_p * n_features,
        layers_per_block=m.layers_per_block,
        taps=m.filter_taps,
        stride=m.stride,
        activation=m.activation,
        normalization=m.normalization,
        viewpoint=m.viewpoint,
    )


def noise_schedule(settings: Settings) -> NoiseSchedule:
    s = settings.diffusion
    return make_schedule(s.schedule, s.steps, s.beta_min, s.beta_max)


# ─────────── checkpoints ──────────────────────────────────────────────────
def build_checkpoint(model: UGNN, data: PreparedData, settings: Settings, state: TrainState) -> Checkpoint:
    ckpt = Checkpoint(meta={
        "settings": settings.to_dict(),
        "model": model.config.to_dict(),
        "kept": [list(s.kept_indices) for s in model.samplers[1:]],
        "tickers": data.tickers,
        "t_p": data.t_p,
        "t_h": data.t_h,
        "features": data.feature_columns,
        "x_stats": data.x_stats.to_dict(),
        "u_stats": data.u_stats.to_dict(),
    })
    ckpt.arrays["graph.shift"] = model.shift.dense()
    return state.to_checkpoint(ckpt)


@dataclass
class LoadedModel:
    model: UGNN
    schedule: NoiseSchedule
    settings: Settings
    x_stats: StandardStats
    u_stats: StandardStats
    meta: dict

    @property
    def stats(self) -> tuple[StandardStats, StandardStats]:
        return self.x_stats, self.u_stats


def load_model(path: str | Path) -> LoadedModel:
    """A sampling-ready model carrying the best-validation parameters."""
    ckpt = load_checkpoint(path)
    meta = ckpt.meta
    settings = Settings.from_dict(meta["settings"])
    config = UGNNConfig.from_dict(meta["model"])
    shift = build_shift(ckpt.arrays["graph.shift"], normalize=False)
    selections = selections_from_kept(meta["kept"], shift.n_nodes)
    state = TrainState.from_checkpoint(ckpt)
    params = state.best_params or state.params
    model = UGNN(config, shift, selections, params=params)
    return LoadedModel(
        model, noise_schedule(settings), settings,
        StandardStats.from_dict(meta["x_stats"]), StandardStats.from_dict(meta["u_stats"]), meta,
    )


# ─────────── training ─────────────────────────────────────────────────────
def fit(
    data: PreparedData,
    settings: Settings,
    out: str | Path,
    resume: str | Path | None = None,
) -> Path:
    """Train on ``data`` and write the checkpoint to ``out``."""
    config = model_config(settings, len(data.tickers), data.t_p, data.t_h, data.n_features)
    built: list[UGNN] = []

    def builder() -> UGNN:
        model = UGNN.build(config, data.shift, seed=settings.model.init_seed)
        built.append(model)
        return model

    state = TrainState.from_checkpoint(load_checkpoint(resume)) if resume else None
    if state is not None:
        logger.info("resuming from %s at epoch %d", resume, state.epoch)
    state = train(
        settings.train_config(), data.dataset(), builder, noise_schedule(settings),
        resume=state, snapshot_dir=Path(out).parent,
    )
    out = Path(out)
    save_checkpoint(out, build_checkpoint(built[0], data, settings, state))
    logger.info("checkpoint saved to %s", out)
    return out


# ─────────── forecasting ──────────────────────────────────────────────────
def window_seed(seed: int, window_id: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(window_id,)).generate_state(1)[0])


def forecast_ugnn(
    loaded: LoadedModel,
    windows: list[WindowPair],
    raw: list[WindowPair],
    n_traj: int,
    seed: int,
) -> list[ForecastEnsemble]:
    """Sample every window and map the trajectories back to raw log returns."""
    s = loaded.settings.diffusion
    out = []
    for j, (w, r) in enumerate(zip(windows, raw)):
        ens = sample(loaded.model, w.past, loaded.schedule, n_traj, window_seed(seed, j), objective=s.objective)
        trajs = ens.trajs * loaded.x_stats.std + loaded.x_stats.mean
        out.append(ForecastEnsemble(
            trajs, r.future.T, r.past.T,
            {"window_id": j, "model": "U-GNN", "origin": list(w.origin)},
        ))
    logger.info("sampled %d windows x %d trajectories", len(out), n_traj)
    return out


def forecast_grw(raw: list[WindowPair], t_h: int, n_traj: int, seed: int) -> list[ForecastEnsemble]:
    return [
        grw_forecast(r.past.T, t_h, n_traj, window_seed(seed, j), target=r.future.T, window_id=j)
        for j, r in enumerate(raw)
    ]


def run_benchmark(
    table: PriceTable,
    adjacency: np.ndarray,
    settings: Settings,
    setups: tuple[tuple[int, int], ...],
    workdir: str | Path,
) -> pd.DataFrame:
    """train -> sample -> evaluate for every (T_p, T_h), U-GNN next to GRW."""
    workdir = Path(workdir)
    frames = []
    sm = settings.sample
    for t_p, t_h in setups:
        run = settings.with_overrides(data__t_p=t_p, data__t_h=t_h)
        data = prepare_data(table, adjacency, run)
        ckpt = fit(data, run, workdir / f"ugnn_tp{t_p}_th{t_h}.ckpt")
        loaded = load_model(ckpt)
        ugnn = forecast_ugnn(loaded, data.windows["test"], data.raw["test"], sm.n_traj, sm.seed)
        grw = forecast_grw(data.raw["test"], t_h, sm.n_traj, sm.seed)
        frames.append(summarize(ugnn, "U-GNN", t_p, t_h, sm.alpha, sm.cumulative))
        frames.append(summarize(grw, "GRW", t_p, t_h, sm.alpha, sm.cumulative))
    return combine(frames)
