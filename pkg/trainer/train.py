# trainer/train.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from autodiff.params import ParameterStore
from diffusion.process import OBJECTIVES, Denoiser, training_loss
from diffusion.schedule import NoiseSchedule
from errors import ArgumentError, DataError, NumericError, TrainingDiverged
from trainer.checkpoint import Checkpoint, save_checkpoint
from trainer.lr_schedule import WarmRestarts, lr_at
from trainer.optim import AdamState, AdamWParams, optimizer_step

logger = logging.getLogger(__name__)

Example = tuple[np.ndarray, np.ndarray | None]
VAL_STREAM = 7919


@dataclass(frozen=True)
class EarlyStop:
    patience: int = 500


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    max_epochs: int = 50_000
    lr_schedule: WarmRestarts = WarmRestarts()
    optimizer: AdamWParams = AdamWParams()
    early_stop: EarlyStop = EarlyStop()
    seed: int = 0
    objective: str = "eps_pred"
    log_every: int = 100
    divergence_threshold: float = 1e6

    @property
    def lr_init(self) -> float:
        return self.lr_schedule.lr_init

    def validate(self) -> None:
        if self.batch_size < 1 or self.max_epochs < 1 or self.log_every < 1:
            raise ArgumentError("batch_size, max_epochs and log_every must be positive")
        if self.early_stop.patience < 0:
            raise ArgumentError("patience must be >= 0")
        if self.objective not in OBJECTIVES:
            raise ArgumentError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        self.lr_schedule.validate()
        self.optimizer.validate()


@dataclass
class Dataset:
    train: Sequence[Example]
    val: Sequence[Example]


@dataclass
class TrainState:
    """Everything needed to continue a run exactly where it stopped."""

    epoch: int
    params: ParameterStore
    adam: AdamState
    rng_state: dict
    best_val: float = math.inf
    best_params: ParameterStore | None = None
    bad_epochs: int = 0
    history: list[tuple[int, float, float]] = field(default_factory=list)
    stopped_early: bool = False

    @classmethod
    def fresh(cls, params: ParameterStore, seed: int) -> "TrainState":
        return cls(0, params.copy(), AdamState.zeros_like(params), np.random.default_rng(seed).bit_generator.state)

    # ── checkpoint packing ────────────────────────────────────────────────
    def to_checkpoint(self, ckpt: Checkpoint | None = None) -> Checkpoint:
        ckpt = ckpt or Checkpoint()
        ckpt.put_group("params", self.params.as_arrays())
        ckpt.put_group("adam.m", self.adam.m)
        ckpt.put_group("adam.v", self.adam.v)
        if self.best_params is not None:
            ckpt.put_group("best", self.best_params.as_arrays())
        ckpt.meta["train_state"] = {
            "epoch": self.epoch,
            "adam_step": self.adam.step,
            "rng": self.rng_state,
            "best_val": self.best_val,
            "bad_epochs": self.bad_epochs,
            "history": [list(h) for h in self.history],
            "stopped_early": self.stopped_early,
        }
        return ckpt

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "TrainState":
        meta = ckpt.meta.get("train_state")
        if meta is None:
            raise DataError("checkpoint holds no training state")
        best = ckpt.group("best")
        return cls(
            epoch=int(meta["epoch"]),
            params=ParameterStore(ckpt.group("params")),
            adam=AdamState(int(meta["adam_step"]), ckpt.group("adam.m"), ckpt.group("adam.v")),
            rng_state=meta["rng"],
            best_val=float(meta["best_val"]),
            best_params=ParameterStore(best) if best else None,
            bad_epochs=int(meta["bad_epochs"]),
            history=[(int(e), float(a), float(b)) for e, a, b in meta["history"]],
            stopped_early=bool(meta.get("stopped_early", False)),
        )


def _restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng


def validation_loss(
    model: Denoiser,
    params: ParameterStore,
    val: Sequence[Example],
    schedule: NoiseSchedule,
    seed: int,
    objective: str,
    batch_size: int,
) -> float:
    """Mean loss over the validation windows with the same (t, eps) draws every call."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(VAL_STREAM,)))
    total, count = 0.0, 0
    for lo in range(0, len(val), batch_size):
        batch = val[lo : lo + batch_size]
        loss, _ = training_loss(model, params, batch, schedule, rng, objective, with_grad=False)
        total += loss * len(batch)
        count += len(batch)
    return total / count


def train_epoch(
    model: Denoiser,
    state: TrainState,
    train_set: Sequence[Example],
    schedule: NoiseSchedule,
    config: TrainConfig,
    rng: np.random.Generator,
) -> float:
    """One shuffled pass with an AdamW step per mini-batch. Returns the mean loss."""
    lr = lr_at(state.epoch, config.lr_schedule)
    order = rng.permutation(len(train_set))
    total = 0.0
    for lo in range(0, len(order), config.batch_size):
        batch = [train_set[i] for i in order[lo : lo + config.batch_size]]
        loss, grads = training_loss(model, state.params, batch, schedule, rng, config.objective)
        if loss > config.divergence_threshold:
            raise NumericError(f"training loss {loss:.4g} exceeds {config.divergence_threshold:g}")
        optimizer_step(state.params, grads, state.adam, lr, config.optimizer)
        total += loss * len(batch)
    return total / len(order)


def train(
    config: TrainConfig,
    dataset: Dataset,
    model_builder: Callable[[], Denoiser],
    schedule: NoiseSchedule,
    resume: TrainState | None = None,
    snapshot_dir: str | Path | None = None,
) -> TrainState:
    """
    Fit the denoiser with early stopping on the validation loss.

    The returned state keeps the best-validation parameters in
    ``best_params`` and the latest ones in ``params``.
    """
    config.validate()
    if not dataset.train or not dataset.val:
        raise DataError(f"need non-empty train/val splits, got {len(dataset.train)}/{len(dataset.val)}")
    model = model_builder()
    state = resume or TrainState.fresh(model.params, config.seed)
    model.params = state.params
    rng = _restore_rng(state.rng_state)
    logger.info(
        "training on %d windows (%d validation), batch %d, from epoch %d",
        len(dataset.train), len(dataset.val), config.batch_size, state.epoch,
    )

    while state.epoch < config.max_epochs and not state.stopped_early:
        try:
            train_loss = train_epoch(model, state, dataset.train, schedule, config, rng)
            val_loss = validation_loss(
                model, state.params, dataset.val, schedule, config.seed, config.objective, config.batch_size
            )
        except NumericError as exc:
            snapshot = None
            if snapshot_dir is not None:
                snapshot = str(Path(snapshot_dir) / f"diverged_epoch{state.epoch}.ckpt")
                state.rng_state = rng.bit_generator.state
                save_checkpoint(snapshot, state.to_checkpoint())
            logger.error("training diverged at epoch %d: %s (snapshot: %s)", state.epoch, exc, snapshot)
            raise TrainingDiverged(f"diverged at epoch {state.epoch}: {exc}", snapshot) from exc

        state.history.append((state.epoch, train_loss, val_loss))
        if val_loss < state.best_val:
            state.best_val = val_loss
            state.best_params = state.params.copy()
            state.bad_epochs = 0
        else:
            state.bad_epochs += 1
        if state.epoch % config.log_every == 0:
            logger.info(
                "epoch %d lr %.3g train %.5f val %.5f (best %.5f)",
                state.epoch, lr_at(state.epoch, config.lr_schedule), train_loss, val_loss, state.best_val,
            )
        state.epoch += 1
        if state.bad_epochs > config.early_stop.patience:
            state.stopped_early = True
            logger.info(
                "early stop after epoch %d: no improvement for %d epochs", state.epoch - 1, state.bad_epochs
            )
    state.rng_state = rng.bit_generator.state
    logger.info("training finished at epoch %d, best validation loss %.5f", state.epoch, state.best_val)
    return state
