# Pipeline helpers live in trainer.pipeline and are imported from there
# directly; they depend on config_handler, which imports this package.
from trainer.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from trainer.lr_schedule import WarmRestarts, lr_at
from trainer.optim import AdamState, AdamWParams, optimizer_step
from trainer.train import Dataset, EarlyStop, TrainConfig, TrainState, train

__all__ = [
    "AdamState",
    "AdamWParams",
    "Checkpoint",
    "Dataset",
    "EarlyStop",
    "TrainConfig",
    "TrainState",
    "WarmRestarts",
    "load_checkpoint",
    "lr_at",
    "optimizer_step",
    "save_checkpoint",
    "train",
]
