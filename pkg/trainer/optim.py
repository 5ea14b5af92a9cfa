# trainer/optim.py
"""AdamW with decoupled weight decay over a ParameterStore."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from autodiff.params import ParameterStore
from errors import ArgumentError, NumericError, StructuralError


@dataclass(frozen=True)
class AdamWParams:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4

    def validate(self) -> None:
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ArgumentError(f"betas must lie in [0, 1), got ({self.beta1}, {self.beta2})")
        if self.eps <= 0 or self.weight_decay < 0:
            raise ArgumentError("eps must be positive and weight_decay non-negative")


@dataclass
class AdamState:
    """First/second moments per parameter and the number of steps taken."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: ParameterStore) -> "AdamState":
        return cls(
            0,
            {n: np.zeros_like(params.array(n)) for n in params.names()},
            {n: np.zeros_like(params.array(n)) for n in params.names()},
        )

    def copy(self) -> "AdamState":
        return AdamState(self.step, {k: a.copy() for k, a in self.m.items()}, {k: a.copy() for k, a in self.v.items()})


def optimizer_step(
    params: ParameterStore,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    hp: AdamWParams = AdamWParams(),
) -> AdamState:
    """
    One AdamW update. ``params`` receives fresh tensors; ``state`` is
    advanced in place and returned.

    Decay comes first, w <- w - lr * lambda * w, followed by the
    bias-corrected adaptive step. A non-finite gradient aborts the step
    before anything is touched.
    """
    missing = set(params.names()) - set(grads)
    if missing:
        raise StructuralError(f"no gradient for {sorted(missing)}")
    for name in params.names():
        g = grads[name]
        if g.shape != params.array(name).shape:
            raise StructuralError(f"{name}: gradient {g.shape} vs parameter {params.array(name).shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")

    step = state.step + 1
    bc1 = 1.0 - hp.beta1**step
    bc2 = 1.0 - hp.beta2**step
    for name in params.names():
        g = grads[name]
        m = hp.beta1 * state.m[name] + (1.0 - hp.beta1) * g
        v = hp.beta2 * state.v[name] + (1.0 - hp.beta2) * g * g
        w = params.array(name) * (1.0 - lr * hp.weight_decay)
        w = w - lr * (m / bc1) / (np.sqrt(v / bc2) + hp.eps)
        state.m[name], state.v[name] = m, v
        params.set(name, w)
    state.step = step
    return state
