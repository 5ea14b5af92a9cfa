# config_handler.py
"""
TOML run configuration.

Every key has a default; a file only lists what it changes. Any key can
also be set through ``UGNN_<SECTION>_<KEY>`` in the environment, which
wins over the file.
"""
from __future__ import annotations

import logging
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from errors import ConfigError, UGNNError
from trainer.lr_schedule import WarmRestarts
from trainer.optim import AdamWParams
from trainer.train import EarlyStop, TrainConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "UGNN"


# ─────────── sections ─────────────────────────────────────────────────────
@dataclass
class DataSection:
    prices_csv: str = "data/prices.csv"
    fundamentals_csv: str = "data/fundamentals.csv"
    adjacency_csv: str = ""
    features: list[str] = field(default_factory=lambda: ["log_return", "log_volume"])
    t_p: int = 20
    t_h: int = 10
    stride: int = 1
    chunk_len: int = 60
    split_ratios: list[float] = field(default_factory=lambda: [0.90, 0.05, 0.05])
    split_seed: int = 0


@dataclass
class ModelSection:
    depth: int = 3
    layers_per_block: int = 2
    filter_taps: int = 2
    stride: int = 1
    f0: int = 64
    node_ratios: list[float] = field(default_factory=lambda: [1.0, 0.8, 0.8])
    activation: str = "silu"
    normalization: str = "layer"
    viewpoint: str = "zero_pad"
    init_seed: int = 0


@dataclass
class DiffusionSection:
    steps: int = 500
    schedule: str = "cosine"
    beta_min: float = 1e-4
    beta_max: float = 0.02
    objective: str = "eps_pred"


@dataclass
class TrainSection:
    batch_size: int = 64
    max_epochs: int = 50_000
    lr_init: float = 2e-2
    seed: int = 0
    log_every: int = 100
    divergence_threshold: float = 1e6


@dataclass
class OptimizerSection:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4


@dataclass
class LRScheduleSection:
    period_0: int = 1000
    period_mult: int = 2
    lr_min: float = 1e-5


@dataclass
class EarlyStopSection:
    patience: int = 500


@dataclass
class SampleSection:
    n_traj: int = 20
    seed: int = 0
    alpha: float = 0.05
    cumulative: bool = True


SECTIONS: dict[str, type] = {
    "data": DataSection,
    "model": ModelSection,
    "diffusion": DiffusionSection,
    "train": TrainSection,
    "optimizer": OptimizerSection,
    "lr_schedule": LRScheduleSection,
    "early_stop": EarlyStopSection,
    "sample": SampleSection,
}


@dataclass
class Settings:
    data: DataSection = field(default_factory=DataSection)
    model: ModelSection = field(default_factory=ModelSection)
    diffusion: DiffusionSection = field(default_factory=DiffusionSection)
    train: TrainSection = field(default_factory=TrainSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    lr_schedule: LRScheduleSection = field(default_factory=LRScheduleSection)
    early_stop: EarlyStopSection = field(default_factory=EarlyStopSection)
    sample: SampleSection = field(default_factory=SampleSection)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "Settings":
        return cls(**{name: _build_section(name, raw.get(name, {})) for name in SECTIONS})

    def train_config(self) -> TrainConfig:
        """The optimisation settings as the trainer consumes them."""
        cfg = TrainConfig(
            batch_size=self.train.batch_size,
            max_epochs=self.train.max_epochs,
            lr_schedule=WarmRestarts(
                lr_init=self.train.lr_init,
                lr_min=self.lr_schedule.lr_min,
                period_0=self.lr_schedule.period_0,
                period_mult=self.lr_schedule.period_mult,
            ),
            optimizer=AdamWParams(**asdict(self.optimizer)),
            early_stop=EarlyStop(self.early_stop.patience),
            seed=self.train.seed,
            objective=self.diffusion.objective,
            log_every=self.train.log_every,
            divergence_threshold=self.train.divergence_threshold,
        )
        try:
            cfg.validate()
        except UGNNError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Apply ``section__key=value`` overrides (None values are skipped)."""
        out = Settings.from_dict(self.to_dict())
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, key = dotted.split("__", 1)
            setattr(out, section, replace(getattr(out, section), **{key: value}))
        return out


# ─────────── parsing ──────────────────────────────────────────────────────
def _coerce(section: str, key: str, value: Any, default: Any) -> Any:
    where = f"[{section}] {key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list, got {value!r}")
        if default:
            return [_coerce(section, key, v, default[0]) for v in value]
        return list(value)
    raise ConfigError(f"{where}: unsupported setting type")


def _build_section(name: str, raw: Mapping[str, Any]):
    cls = SECTIONS[name]
    if not isinstance(raw, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    values = {k: _coerce(name, k, v, getattr(defaults, k)) for k, v in raw.items()}
    return replace(defaults, **values)


def _parse_env(raw: str, default: Any, where: str) -> Any:
    try:
        if isinstance(default, bool):
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return [_parse_env(s, default[0], where) for s in items] if default else items
        return raw
    except ValueError as exc:
        raise ConfigError(f"environment override {where}={raw!r} does not parse") from exc


def env_overrides(settings: Settings, environ: Mapping[str, str]) -> Settings:
    out = settings
    for name in SECTIONS:
        section = getattr(out, name)
        changes = {}
        for f in fields(section):
            var = f"{ENV_PREFIX}_{name}_{f.name}".upper()
            if var in environ:
                changes[f.name] = _parse_env(environ[var], getattr(section, f.name), var)
                logger.info("config override from %s", var)
        if changes:
            out = replace(out, **{name: replace(section, **changes)})
    return out


def load_settings(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> Settings:
    """Defaults, then the TOML file (if any), then environment overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            with path.open("rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        unknown = sorted(set(raw) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown section(s) in {path}: {', '.join(unknown)}")
    settings = Settings.from_dict(raw)
    return env_overrides(settings, os.environ if environ is None else environ)
