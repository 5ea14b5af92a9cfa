# autodiff/gradcheck.py
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from autodiff.tape import Tape, Tensor
from errors import ArgumentError

ScalarFn = Callable[[Tape, dict[str, Tensor]], Tensor]


def _evaluate(f: ScalarFn, arrays: Mapping[str, np.ndarray]) -> float:
    tape = Tape()
    leaves = {name: tape.leaf(value, requires_grad=False, name=name) for name, value in arrays.items()}
    return f(tape, leaves).item()


def analytic_grads(f: ScalarFn, params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    tape = Tape()
    leaves = {name: tape.leaf(value, requires_grad=True, name=name) for name, value in params.items()}
    return tape.backward(f(tape, leaves))


def grad_check(f: ScalarFn, params: Mapping[str, np.ndarray], step: float = 1e-6) -> float:
    """
    Compare tape gradients with central finite differences.

    Returns the largest |a - n| / max(1, |a|, |n|) over all coordinates.
    """
    if not 1e-8 <= step <= 1e-4:
        raise ArgumentError(f"finite-difference step must lie in [1e-8, 1e-4], got {step}")
    base = {name: np.array(value, dtype=np.float64, ndmin=2) for name, value in params.items()}
    analytic = analytic_grads(f, base)

    worst = 0.0
    for name, value in base.items():
        for idx in np.ndindex(value.shape):
            plus = dict(base)
            minus = dict(base)
            plus[name] = value.copy()
            minus[name] = value.copy()
            plus[name][idx] += step
            minus[name][idx] -= step
            numeric = (_evaluate(f, plus) - _evaluate(f, minus)) / (2.0 * step)
            a = float(analytic[name][idx])
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, err)
    return worst
