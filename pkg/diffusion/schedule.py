# diffusion/schedule.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import ArgumentError

logger = logging.getLogger(__name__)

BETA_MIN_CLIP = 1e-8
BETA_MAX_CLIP = 0.999
COSINE_OFFSET = 0.008


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """
    beta_t, alpha_t = 1 - beta_t and alpha_bar_t = prod alpha_i for t = 1..T.

    Arrays are indexed by ``t - 1``; use the accessors for 1-based steps.
    """

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @classmethod
    def from_betas(cls, beta) -> "NoiseSchedule":
        beta = np.clip(np.asarray(beta, dtype=np.float64), BETA_MIN_CLIP, BETA_MAX_CLIP)
        if beta.ndim != 1 or beta.size < 1:
            raise ArgumentError("a schedule needs a non-empty 1-D beta array")
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        for arr in (beta, alpha, alpha_bar):
            arr.flags.writeable = False
        if alpha_bar[-1] >= 0.01:
            logger.warning(
                "schedule ends at alpha_bar=%.4g; x_T is far from isotropic noise", alpha_bar[-1]
            )
        return cls(int(beta.size), beta, alpha, alpha_bar)

    def _check(self, t: int, allow_zero: bool = False) -> int:
        lo = 0 if allow_zero else 1
        if not lo <= t <= self.T:
            raise ArgumentError(f"diffusion step must lie in [{lo}, {self.T}], got {t}")
        return int(t)

    def beta_at(self, t: int) -> float:
        return float(self.beta[self._check(t) - 1])

    def alpha_at(self, t: int) -> float:
        return float(self.alpha[self._check(t) - 1])

    def alpha_bar_at(self, t: int) -> float:
        """alpha_bar_t with the convention alpha_bar_0 = 1."""
        t = self._check(t, allow_zero=True)
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])


def cosine_alpha_bar(t, T: int, s: float = COSINE_OFFSET):
    """Closed-form f(t) / f(0) with f(t) = cos^2(((t/T + s) / (1 + s)) pi/2)."""
    def f(x):
        return np.cos(((np.asarray(x, dtype=np.float64) / T + s) / (1.0 + s)) * math.pi / 2.0) ** 2
    return f(t) / f(0.0)


def cosine_schedule(T: int, s: float = COSINE_OFFSET) -> NoiseSchedule:
    if T < 2:
        raise ArgumentError(f"cosine schedule needs T >= 2, got {T}")
    bars = cosine_alpha_bar(np.arange(T + 1), T, s)
    beta = 1.0 - bars[1:] / bars[:-1]
    return NoiseSchedule.from_betas(beta)


def linear_schedule(T: int, beta_min: float, beta_max: float) -> NoiseSchedule:
    if T < 1:
        raise ArgumentError(f"schedule needs T >= 1, got {T}")
    if not 0.0 < beta_min <= beta_max < 1.0:
        raise ArgumentError(
            f"need 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})"
        )
    return NoiseSchedule.from_betas(np.linspace(beta_min, beta_max, T))


def make_schedule(kind: str, T: int, beta_min: float = 1e-4, beta_max: float = 0.02) -> NoiseSchedule:
    if kind == "cosine":
        return cosine_schedule(T)
    if kind == "linear":
        return linear_schedule(T, beta_min, beta_max)
    raise ArgumentError(f"unknown schedule {kind!r}")
