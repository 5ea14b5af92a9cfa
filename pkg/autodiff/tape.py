# autodiff/tape.py
"""
Reverse-mode differentiation over dense float64 matrices.

A ``Tape`` records every operation as a Wengert-list entry
``(kind, input ids, output id, saved context)``. Forward rules live in
``_FORWARD`` and their adjoints in ``_BACKWARD``; ``backward`` walks the
records in exact reverse insertion order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable

import numpy as np
from scipy.special import expit

from errors import ContractViolation, NumericError, StructuralError

if TYPE_CHECKING:
    from autodiff.params import ParameterStore

logger = logging.getLogger(__name__)

LAYER_NORM_EPS = 1e-5


# ─────────── tensors ──────────────────────────────────────────────────────
class Tensor:
    """Immutable 2-D float64 matrix, optionally attached to a tape."""

    __slots__ = ("data", "requires_grad", "node_id", "tape", "name")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        *,
        node_id: int | None = None,
        tape: "Tape | None" = None,
        name: str | None = None,
        copy: bool = True,
    ):
        arr = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise StructuralError(f"tensors are 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in tensor {name or ''}".rstrip())
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = requires_grad
        self.node_id = node_id
        self.tape = tape
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ContractViolation(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"<Tensor{tag} {self.shape[0]}x{self.shape[1]} id={self.node_id}>"

    # sugar over Tape.record
    def __matmul__(self, other: "Tensor") -> "Tensor":
        return _tape_of(self, other).record("matmul", self, other)

    def __add__(self, other: "Tensor") -> "Tensor":
        return _tape_of(self, other).record("add", self, other)

    def __mul__(self, c: float) -> "Tensor":
        return _tape_of(self).record("scale", self, factor=float(c))

    __rmul__ = __mul__


def _tape_of(*tensors: Tensor) -> "Tape":
    tape = tensors[0].tape
    if tape is None:
        raise ContractViolation("tensor is not recorded on a tape")
    return tape


# ─────────── forward rules ────────────────────────────────────────────────
def _require(cond: bool, message: str) -> None:
    if not cond:
        raise StructuralError(message)


def _fw_matmul(a, b):
    _require(a.shape[1] == b.shape[0], f"matmul {a.shape} @ {b.shape}")
    return a @ b, {}


def _fw_add(a, b):
    _require(
        b.shape == a.shape or (b.shape[0] == 1 and b.shape[1] == a.shape[1]),
        f"add {a.shape} + {b.shape}",
    )
    return a + b, {"broadcast": b.shape != a.shape}


def _fw_scale(a, *, factor):
    return factor * a, {}


def _fw_concat(*xs):
    _require(len({x.shape[0] for x in xs}) == 1, "concat_cols needs equal row counts")
    return np.hstack(xs), {"widths": [x.shape[1] for x in xs]}


def _fw_slice(a, *, start, stop):
    _require(0 <= start < stop <= a.shape[1], f"slice_cols [{start}:{stop}] of {a.shape}")
    return a[:, start:stop].copy(), {}


def _fw_relu(a):
    return np.maximum(a, 0.0), {}


def _fw_silu(a):
    s = expit(a)
    return a * s, {"sig": s}


def _fw_layer_norm(x, gain, bias, *, eps=LAYER_NORM_EPS):
    _require(gain.shape == (1, x.shape[1]), f"layer_norm gain {gain.shape} vs {x.shape}")
    _require(bias.shape == (1, x.shape[1]), f"layer_norm bias {bias.shape} vs {x.shape}")
    centred = x - x.mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt((centred**2).mean(axis=1, keepdims=True) + eps)
    xhat = centred * inv
    return xhat * gain + bias, {"xhat": xhat, "inv": inv}


def _fw_mse(pred, target):
    _require(pred.shape == target.shape, f"mse {pred.shape} vs {target.shape}")
    diff = pred - target
    return np.array([[np.mean(diff**2)]]), {"diff": diff}


def _fw_row_select(x, *, index, n_full, transpose=False):
    if transpose:
        _require(x.shape[0] == len(index), f"row_select^T expects {len(index)} rows, got {x.shape[0]}")
        out = np.zeros((n_full, x.shape[1]))
        out[index] = x
        return out, {}
    _require(x.shape[0] == n_full, f"row_select expects {n_full} rows, got {x.shape[0]}")
    return x[index], {}


def _fw_sparse_matmul(x, *, matrix):
    _require(matrix.shape[1] == x.shape[0], f"sparse_matmul {matrix.shape} @ {x.shape}")
    return np.asarray(matrix @ x), {}


_FORWARD: dict[str, Callable[..., tuple[np.ndarray, dict]]] = {
    "matmul": _fw_matmul,
    "add": _fw_add,
    "scale": _fw_scale,
    "concat_cols": _fw_concat,
    "slice_cols": _fw_slice,
    "relu": _fw_relu,
    "silu": _fw_silu,
    "layer_norm": _fw_layer_norm,
    "mse": _fw_mse,
    "row_select": _fw_row_select,
    "sparse_matmul": _fw_sparse_matmul,
}


# ─────────── adjoints ─────────────────────────────────────────────────────
def _bw_matmul(g, vals, saved, attrs):
    a, b = vals
    return g @ b.T, a.T @ g


def _bw_add(g, vals, saved, attrs):
    gb = g.sum(axis=0, keepdims=True) if saved["broadcast"] else g
    return g, gb


def _bw_scale(g, vals, saved, attrs):
    return (attrs["factor"] * g,)


def _bw_concat(g, vals, saved, attrs):
    edges = np.cumsum([0] + saved["widths"])
    return tuple(g[:, lo:hi] for lo, hi in zip(edges[:-1], edges[1:]))


def _bw_slice(g, vals, saved, attrs):
    ga = np.zeros_like(vals[0])
    ga[:, attrs["start"] : attrs["stop"]] = g
    return (ga,)


def _bw_relu(g, vals, saved, attrs):
    return (g * (vals[0] > 0.0),)


def _bw_silu(g, vals, saved, attrs):
    a, s = vals[0], saved["sig"]
    return (g * (s * (1.0 + a * (1.0 - s))),)


def _bw_layer_norm(g, vals, saved, attrs):
    _, gain, _ = vals
    xhat, inv = saved["xhat"], saved["inv"]
    g_gain = (g * xhat).sum(axis=0, keepdims=True)
    g_bias = g.sum(axis=0, keepdims=True)
    gx_hat = g * gain
    gx = inv * (
        gx_hat
        - gx_hat.mean(axis=1, keepdims=True)
        - xhat * (gx_hat * xhat).mean(axis=1, keepdims=True)
    )
    return gx, g_gain, g_bias


def _bw_mse(g, vals, saved, attrs):
    diff = saved["diff"]
    gp = g[0, 0] * 2.0 * diff / diff.size
    return gp, -gp


def _bw_row_select(g, vals, saved, attrs):
    index = attrs["index"]
    if attrs.get("transpose", False):
        return (g[index],)
    gx = np.zeros((attrs["n_full"], g.shape[1]))
    gx[index] = g
    return (gx,)


def _bw_sparse_matmul(g, vals, saved, attrs):
    return (np.asarray(attrs["matrix"].T @ g),)


_BACKWARD: dict[str, Callable[..., tuple[np.ndarray, ...]]] = {
    "matmul": _bw_matmul,
    "add": _bw_add,
    "scale": _bw_scale,
    "concat_cols": _bw_concat,
    "slice_cols": _bw_slice,
    "relu": _bw_relu,
    "silu": _bw_silu,
    "layer_norm": _bw_layer_norm,
    "mse": _bw_mse,
    "row_select": _bw_row_select,
    "sparse_matmul": _bw_sparse_matmul,
}

OPS = tuple(_FORWARD)


# ─────────── tape ─────────────────────────────────────────────────────────
@dataclass
class Record:
    kind: str
    inputs: tuple[int, ...]
    output: int
    saved: dict[str, Any] = field(default_factory=dict)
    attrs: dict[str, Any] = field(default_factory=dict)


class Tape:
    """Single-threaded recording of one forward pass."""

    def __init__(self):
        self._nodes: list[Tensor] = []
        self._records: list[Record] = []

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[Record, ...]:
        return tuple(self._records)

    def _register(self, data, requires_grad: bool, name: str | None, copy: bool) -> Tensor:
        t = Tensor(data, requires_grad, node_id=len(self._nodes), tape=self, name=name, copy=copy)
        self._nodes.append(t)
        return t

    def leaf(self, data, requires_grad: bool = False, name: str | None = None) -> Tensor:
        return self._register(data, requires_grad, name, copy=True)

    def constant(self, data) -> Tensor:
        return self._register(data, False, None, copy=True)

    def watch(self, store: "ParameterStore", requires_grad: bool = True) -> dict[str, Tensor]:
        """Register every parameter of ``store`` as a named leaf."""
        return {
            name: self._register(t.data, requires_grad, name, copy=False)
            for name, t in store.items()
        }

    def record(self, kind: str, *inputs: Tensor, **attrs) -> Tensor:
        forward = _FORWARD.get(kind)
        if forward is None:
            raise ContractViolation(f"unknown tape operation {kind!r}")
        for t in inputs:
            if t.tape is not self:
                raise ContractViolation(f"{kind}: input {t!r} belongs to another tape")
        out, saved = forward(*(t.data for t in inputs), **attrs)
        if not np.all(np.isfinite(out)):
            raise NumericError(f"{kind} produced non-finite values")
        needs = any(t.requires_grad for t in inputs)
        result = self._register(out, needs, None, copy=False)
        self._records.append(
            Record(kind, tuple(t.node_id for t in inputs), result.node_id, saved, attrs)
        )
        return result

    def backward(self, loss: Tensor) -> dict[str, np.ndarray]:
        """
        Gradients of a scalar ``loss`` for every named gradient leaf.

        Leaves that no path from ``loss`` reaches get zero gradients.
        """
        if loss.tape is not self:
            raise ContractViolation("loss was recorded on another tape")
        if loss.shape != (1, 1):
            raise ContractViolation(f"backward needs a 1x1 loss, got {loss.shape}")

        grads: list[np.ndarray | None] = [None] * len(self._nodes)
        grads[loss.node_id] = np.ones((1, 1))
        for rec in reversed(self._records):
            g = grads[rec.output]
            if g is None or not self._nodes[rec.output].requires_grad:
                continue
            values = [self._nodes[i].data for i in rec.inputs]
            parts = _BACKWARD[rec.kind](g, values, rec.saved, rec.attrs)
            for node_id, part in zip(rec.inputs, parts):
                if not self._nodes[node_id].requires_grad:
                    continue
                prev = grads[node_id]
                grads[node_id] = part if prev is None else prev + part

        out: dict[str, np.ndarray] = {}
        for node in self._nodes:
            if node.requires_grad and node.name is not None:
                g = grads[node.node_id]
                out[node.name] = np.zeros(node.shape) if g is None else g
        return out
