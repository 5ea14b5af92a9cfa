# autodiff/ops.py
"""Functional spellings of the tape vocabulary."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from autodiff.tape import LAYER_NORM_EPS, Tensor, _tape_of


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return _tape_of(a).record("matmul", a, b)


def add(a: Tensor, b: Tensor) -> Tensor:
    """a + b, where ``b`` may be a single row broadcast over the rows of ``a``."""
    return _tape_of(a).record("add", a, b)


def scale(a: Tensor, factor: float) -> Tensor:
    return _tape_of(a).record("scale", a, factor=float(factor))


def concat_cols(*xs: Tensor) -> Tensor:
    return _tape_of(xs[0]).record("concat_cols", *xs)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    return _tape_of(a).record("slice_cols", a, start=int(start), stop=int(stop))


def relu(a: Tensor) -> Tensor:
    return _tape_of(a).record("relu", a)


def silu(a: Tensor) -> Tensor:
    return _tape_of(a).record("silu", a)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Per-row normalization with learnable 1×W gain and bias."""
    return _tape_of(x).record("layer_norm", x, gain, bias, eps=eps)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    return _tape_of(pred).record("mse", pred, target)


def row_select(x: Tensor, index: Sequence[int], n_full: int, transpose: bool = False) -> Tensor:
    """
    Multiply by a fixed 0/1 selection matrix.

    ``transpose=False`` gathers the rows ``index`` of an ``n_full``-row input
    (C x); ``transpose=True`` scatters the rows of ``x`` to positions
    ``index`` of an ``n_full``-row zero matrix (C^T x).
    """
    idx = np.asarray(index, dtype=np.intp)
    return _tape_of(x).record("row_select", x, index=idx, n_full=int(n_full), transpose=transpose)


def sparse_matmul(matrix, x: Tensor) -> Tensor:
    """Constant (sparse or dense) ``matrix`` times ``x``."""
    return _tape_of(x).record("sparse_matmul", x, matrix=matrix)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Per-row affine map x W (+ b)."""
    out = matmul(x, weight)
    return add(out, bias) if bias is not None else out


ACTIVATIONS = {"relu": relu, "silu": silu, "identity": lambda a: a}
