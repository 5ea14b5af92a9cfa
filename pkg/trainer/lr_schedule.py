# trainer/lr_schedule.py
from __future__ import annotations

import math
from dataclasses import dataclass

from errors import ArgumentError


@dataclass(frozen=True)
class WarmRestarts:
    """Cosine annealing from ``lr_init`` to ``lr_min`` with growing restart periods."""

    lr_init: float = 2e-2
    lr_min: float = 1e-5
    period_0: int = 1000
    period_mult: int = 2

    def validate(self) -> None:
        if not self.lr_init > self.lr_min >= 0.0:
            raise ArgumentError(f"need lr_init > lr_min >= 0, got ({self.lr_init}, {self.lr_min})")
        if self.period_0 < 1 or self.period_mult < 1:
            raise ArgumentError("period_0 and period_mult must be >= 1")


def restart_position(epoch: int, sched: WarmRestarts) -> tuple[int, float]:
    """(restart index, progress tau in [0, 1)) for an epoch."""
    if epoch < 0:
        raise ArgumentError(f"epoch must be >= 0, got {epoch}")
    if sched.period_mult == 1:
        return epoch // sched.period_0, (epoch % sched.period_0) / sched.period_0
    i, start, period = 0, 0, sched.period_0
    while epoch >= start + period:
        start += period
        period *= sched.period_mult
        i += 1
    return i, (epoch - start) / period


def lr_at(epoch: int, sched: WarmRestarts) -> float:
    _, tau = restart_position(epoch, sched)
    return sched.lr_min + (sched.lr_init - sched.lr_min) * (1.0 + math.cos(math.pi * tau)) / 2.0
