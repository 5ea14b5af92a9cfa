# diffusion/process.py
"""Forward corruption, training objectives and ancestral sampling."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from autodiff import ops
from autodiff.params import ParameterStore
from autodiff.tape import Tape, Tensor
from diffusion.ensemble import ForecastEnsemble
from diffusion.schedule import NoiseSchedule
from errors import ArgumentError, NumericError, StructuralError

logger = logging.getLogger(__name__)

OBJECTIVES = ("eps_pred", "x0_pred")


class Denoiser(Protocol):
    """What the training loss and the sampler need from a model."""

    def forward(self, tape: Tape, params: Mapping[str, Tensor], x_t: np.ndarray, t, u=None) -> Tensor: ...

    def predict(self, x_t: np.ndarray, t, u=None) -> np.ndarray: ...


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream ``index`` derived from a base seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


# ─────────── forward process ──────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class DiffusionSample:
    x0: np.ndarray
    t: int
    eps: np.ndarray
    x_t: np.ndarray

    @classmethod
    def draw(cls, x0: np.ndarray, t: int, schedule: NoiseSchedule, rng: np.random.Generator) -> "DiffusionSample":
        eps = rng.standard_normal(np.shape(x0))
        return cls(np.asarray(x0, dtype=np.float64), t, eps, forward_sample(x0, t, eps, schedule))


def forward_sample(x0, t: int, eps, schedule: NoiseSchedule) -> np.ndarray:
    """x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps (t = 0 returns x0)."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise StructuralError(f"x0 {x0.shape} and eps {eps.shape} differ")
    bar = schedule.alpha_bar_at(t)
    return np.sqrt(bar) * x0 + np.sqrt(1.0 - bar) * eps


# ─────────── training objective ───────────────────────────────────────────
def _stack_batch(batch: Sequence[tuple[np.ndarray, np.ndarray | None]]):
    if not batch:
        raise ArgumentError("empty training batch")
    x0 = np.stack([np.asarray(x, dtype=np.float64) for x, _ in batch])
    conds = [u for _, u in batch]
    if all(u is None for u in conds):
        return x0, None
    if any(u is None for u in conds):
        raise StructuralError("batch mixes conditioned and unconditioned elements")
    return x0, np.stack([np.asarray(u, dtype=np.float64) for u in conds])


def diffusion_loss(
    model: Denoiser,
    params: ParameterStore,
    x0: np.ndarray,
    u: np.ndarray | None,
    t: np.ndarray,
    eps: np.ndarray,
    schedule: NoiseSchedule,
    objective: str = "eps_pred",
    with_grad: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """
    Mean squared error of the prediction for explicit draws (t, eps).

    ``x0`` and ``eps`` are (batch, N, F), ``t`` holds one step per element.
    """
    if objective not in OBJECTIVES:
        raise ArgumentError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    t = np.asarray(t, dtype=np.int64)
    bars = np.array([schedule.alpha_bar_at(int(s)) for s in t])[:, None, None]
    x_t = np.sqrt(bars) * x0 + np.sqrt(1.0 - bars) * eps
    target = eps if objective == "eps_pred" else x0

    tape = Tape()
    leaves = tape.watch(params, requires_grad=with_grad)
    pred = model.forward(tape, leaves, x_t, t, u)
    loss = ops.mse(pred, tape.constant(target.reshape(pred.shape)))
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError("non-finite training loss")
    grads = tape.backward(loss) if with_grad else {}
    return value, grads


def training_loss(
    model: Denoiser,
    params: ParameterStore,
    batch: Sequence[tuple[np.ndarray, np.ndarray | None]],
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    objective: str = "eps_pred",
    with_grad: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """
    Draw t ~ U{1..T} and eps ~ N(0, I) per element, then score the model.

    Returns ``(loss, gradients)``; gradients are keyed like ``params``.
    """
    x0, u = _stack_batch(batch)
    t = rng.integers(1, schedule.T + 1, size=x0.shape[0])
    eps = rng.standard_normal(x0.shape)
    return diffusion_loss(model, params, x0, u, t, eps, schedule, objective, with_grad)


# ─────────── reverse process ──────────────────────────────────────────────
def reverse_step(x_t, t: int, eps_hat, schedule: NoiseSchedule, w=None) -> np.ndarray:
    """
    x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t) + sqrt(beta_t) w.

    The noise ``w`` is ignored at t = 1.
    """
    beta = schedule.beta_at(t)
    alpha = schedule.alpha_at(t)
    bar = schedule.alpha_bar_at(t)
    x_t = np.asarray(x_t, dtype=np.float64)
    mean = (x_t - (beta / np.sqrt(1.0 - bar)) * np.asarray(eps_hat, dtype=np.float64)) / np.sqrt(alpha)
    if t == 1 or w is None:
        return mean
    return mean + np.sqrt(beta) * np.asarray(w, dtype=np.float64)


def eps_from_x0(x_t: np.ndarray, x0_hat: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    bar = schedule.alpha_bar_at(t)
    return (x_t - np.sqrt(bar) * x0_hat) / np.sqrt(1.0 - bar)


def sample(
    model: Denoiser,
    u: np.ndarray | None,
    schedule: NoiseSchedule,
    n_traj: int,
    seed: int,
    shape: tuple[int, int] | None = None,
    objective: str = "eps_pred",
    chunk: int = 256,
) -> ForecastEnsemble:
    """
    Ancestral sampling of ``n_traj`` trajectories from x_T ~ N(0, I).

    Trajectory ``i`` draws all of its noise from stream ``i`` of ``seed``,
    so results do not depend on how trajectories are chunked or ordered.
    The ensemble holds the samples transposed to T_h x N (features are
    horizon days).
    """
    if n_traj < 1:
        raise ArgumentError(f"n_traj must be >= 1, got {n_traj}")
    if objective not in OBJECTIVES:
        raise ArgumentError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if shape is None:
        shape = (model.config.n_nodes, model.config.target_width)
    out = np.empty((n_traj,) + tuple(shape))
    for lo in range(0, n_traj, chunk):
        ids = range(lo, min(lo + chunk, n_traj))
        rngs = [trajectory_rng(seed, i) for i in ids]
        x = np.stack([r.standard_normal(shape) for r in rngs])
        cond = None if u is None else np.broadcast_to(u, (len(rngs),) + np.shape(u))
        for t in range(schedule.T, 0, -1):
            pred = model.predict(x, np.full(len(rngs), t), cond)
            eps_hat = pred if objective == "eps_pred" else eps_from_x0(x, pred, t, schedule)
            w = None if t == 1 else np.stack([r.standard_normal(shape) for r in rngs])
            x = reverse_step(x, t, eps_hat, schedule, w)
        if not np.all(np.isfinite(x)):
            raise NumericError("sampling produced non-finite values")
        out[lo : lo + len(rngs)] = x
    logger.debug("sampled %d trajectories over %d steps", n_traj, schedule.T)
    return ForecastEnsemble(out.transpose(0, 2, 1), meta={"seed": seed})
