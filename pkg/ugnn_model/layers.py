# ugnn_model/layers.py
"""
Building blocks of the U-GNN, recorded on an autodiff tape.

Signals of a mini-batch are stacked node-major along the rows
(``batch * N_b`` rows), so a single block-diagonal shift serves the
whole batch.
"""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from autodiff import ops
from autodiff.tape import Tensor
from errors import ArgumentError, ContractViolation, StructuralError
from graph_core.sampling import NestedSampler, SelectionMatrix, reduced_shift
from graph_core.shift import GraphShift
from ugnn_model.config import UGNNConfig

TIME_BASE = 10000.0


# ─────────── time embedding ───────────────────────────────────────────────
def time_embedding_rows(t: np.ndarray, dim: int) -> np.ndarray:
    """Sinusoidal embedding, one row per entry of ``t``: [sin(t w) | cos(t w)]."""
    if dim % 2:
        raise ArgumentError(f"time embedding width must be even, got {dim}")
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    if np.any(t < 0):
        raise ArgumentError("diffusion time must be >= 0")
    freqs = TIME_BASE ** (-2.0 * np.arange(dim // 2) / dim)
    angles = t * freqs[None, :]
    return np.hstack([np.sin(angles), np.cos(angles)])


def time_embedding(t: float, dim: int, n_rows: int) -> np.ndarray:
    return time_embedding_rows(np.full(n_rows, t, dtype=np.float64), dim)


# ─────────── resolution ───────────────────────────────────────────────────
def _stack_index(index: np.ndarray, n_full: int, batch: int) -> np.ndarray:
    if batch == 1:
        return index
    return np.concatenate([index + j * n_full for j in range(batch)])


class Resolution:
    """
    A nested sampler D seen over a stacked batch.

    Holds the block-diagonal shift, the stacked kept rows and the reduced
    shifts D (S^gamma)^k D^T, computed on first use.
    """

    def __init__(self, shift: GraphShift, sampler: NestedSampler, batch: int = 1):
        if sampler.n_nodes != shift.n_nodes:
            raise StructuralError(
                f"sampler covers {sampler.n_nodes} nodes, shift has {shift.n_nodes}"
            )
        self.graph = shift
        self.sampler = sampler
        self.batch = batch
        self.shift = shift.matrix if batch == 1 else sp.kron(sp.identity(batch), shift.matrix, format="csr")
        self.index = _stack_index(sampler.index, shift.n_nodes, batch)
        self.n_full = shift.n_nodes * batch
        self.n_rows = sampler.n_out * batch
        self.identity = sampler.is_identity
        self._reduced: dict[tuple[int, int], sp.csr_matrix] = {}

    def reduced(self, gamma: int, k: int) -> sp.csr_matrix:
        key = (gamma, k)
        if key not in self._reduced:
            r = sp.csr_matrix(reduced_shift(self.sampler, self.graph, gamma, k))
            if self.batch > 1:
                r = sp.kron(sp.identity(self.batch), r, format="csr")
            self._reduced[key] = r
        return self._reduced[key]


# ─────────── graph convolutions ───────────────────────────────────────────
def sampled_graph_conv(
    v: Tensor,
    res: Resolution,
    taps: Sequence[Tensor],
    gamma: int = 1,
    activation: str = "silu",
    norm: tuple[Tensor, Tensor] | None = None,
    viewpoint: str = "zero_pad",
) -> Tensor:
    """
    phi( sum_k [D (S^gamma)^k D^T] V H_k ), optionally layer-normalized
    before phi.

    ``viewpoint="zero_pad"`` pads V to the original graph, shifts it
    sparsely and subsamples again; ``viewpoint="reduced"`` multiplies by
    the precomputed reduced shifts instead.
    """
    if v.shape[0] != res.n_rows:
        raise StructuralError(f"conv expects {res.n_rows} rows, got {v.shape[0]}")
    if not taps:
        raise StructuralError("a filter bank needs at least H_0")
    out = ops.matmul(v, taps[0])
    if viewpoint == "reduced":
        for k, h in enumerate(taps[1:], start=1):
            out = ops.add(out, ops.matmul(ops.sparse_matmul(res.reduced(gamma, k), v), h))
    elif viewpoint == "zero_pad":
        z = v if res.identity else ops.row_select(v, res.index, res.n_full, transpose=True)
        for h in taps[1:]:
            for _ in range(gamma):
                z = ops.sparse_matmul(res.shift, z)
            zk = z if res.identity else ops.row_select(z, res.index, res.n_full)
            out = ops.add(out, ops.matmul(zk, h))
    else:
        raise ArgumentError(f"unknown convolution viewpoint {viewpoint!r}")
    if norm is not None:
        out = ops.layer_norm(out, *norm)
    return ops.ACTIVATIONS[activation](out)


def graph_conv(
    v: Tensor,
    shift: GraphShift,
    taps: Sequence[Tensor],
    activation: str = "silu",
    norm: tuple[Tensor, Tensor] | None = None,
) -> Tensor:
    """Plain polynomial filter layer phi(sum_k S^k V H_k) on the full graph."""
    res = Resolution(shift, NestedSampler.identity(shift.n_nodes))
    return sampled_graph_conv(v, res, taps, 1, activation, norm)


def layer_param_names(prefix: str, layer: int, taps: int, normalized: bool) -> list[str]:
    names = [f"{prefix}.layer.{layer}.H_k{k}" for k in range(taps + 1)]
    if normalized:
        names += [f"{prefix}.layer.{layer}.norm.gain", f"{prefix}.layer.{layer}.norm.bias"]
    return names


def gnn(v: Tensor, res: Resolution, params: Mapping[str, Tensor], prefix: str, cfg: UGNNConfig) -> Tensor:
    """The L-layer GNN of one block."""
    for layer, k in enumerate(cfg.filter_taps):
        taps = [params[f"{prefix}.layer.{layer}.H_k{i}"] for i in range(k + 1)]
        norm = None
        if cfg.normalization == "layer":
            norm = (params[f"{prefix}.layer.{layer}.norm.gain"], params[f"{prefix}.layer.{layer}.norm.bias"])
        v = sampled_graph_conv(v, res, taps, cfg.stride, cfg.activation, norm, cfg.viewpoint)
    return v


# ─────────── embeddings ───────────────────────────────────────────────────
def input_embedding(
    x: Tensor,
    t_rows: np.ndarray,
    u: Tensor | None,
    params: Mapping[str, Tensor],
    cfg: UGNNConfig,
) -> Tensor:
    """
    V_0 = [ embed_x(X) + time(t) ; embed_u(U) ].

    ``t_rows`` holds the diffusion step of every row. Without conditioning
    (``conditioning_width == 0``) the right half is zero.
    """
    tape = x.tape
    half = cfg.embed_width
    left = ops.linear(x, params["embed_x.W"], params["embed_x.b"])
    left = ops.add(left, tape.constant(time_embedding_rows(t_rows, half)))
    if cfg.conditioning_width > 0:
        if u is None:
            raise ContractViolation("model is conditional but no u was given")
        if u.shape != (x.shape[0], cfg.conditioning_width):
            raise StructuralError(
                f"u must be {x.shape[0]}x{cfg.conditioning_width}, got {u.shape}"
            )
        right = ops.linear(u, params["embed_u.W"], params["embed_u.b"])
    else:
        right = tape.constant(np.zeros((x.shape[0], half)))
    return ops.concat_cols(left, right)


# ─────────── encoder / decoder ────────────────────────────────────────────
def encoder_block(
    x_prev: Tensor,
    selection: SelectionMatrix,
    res: Resolution,
    params: Mapping[str, Tensor],
    prefix: str,
    cfg: UGNNConfig,
) -> Tensor:
    """X_b = GNN(C_b X_{b-1}) at resolution D_b."""
    if x_prev.shape[0] != selection.n_in * res.batch:
        raise StructuralError(
            f"{prefix}: expected {selection.n_in * res.batch} rows, got {x_prev.shape[0]}"
        )
    v = x_prev
    if not selection.is_identity:
        index = _stack_index(selection.index, selection.n_in, res.batch)
        v = ops.row_select(x_prev, index, selection.n_in * res.batch)
    return gnn(v, res, params, prefix, cfg)


def decoder_block(
    y_b: Tensor,
    skip: Tensor,
    selection: SelectionMatrix,
    res: Resolution,
    params: Mapping[str, Tensor],
    prefix: str,
    cfg: UGNNConfig,
) -> Tensor:
    """Y_{b-1} = GNN(C_b^T [Y_b ; X_b]) at resolution D_{b-1}."""
    if y_b.shape[0] != skip.shape[0]:
        raise StructuralError(f"{prefix}: y has {y_b.shape[0]} rows, skip has {skip.shape[0]}")
    v = ops.concat_cols(y_b, skip)
    if not selection.is_identity:
        index = _stack_index(selection.index, selection.n_in, res.batch)
        v = ops.row_select(v, index, selection.n_in * res.batch, transpose=True)
    return gnn(v, res, params, prefix, cfg)


def bottleneck_mlp(x: Tensor, params: Mapping[str, Tensor], activation: str) -> Tensor:
    hidden = ops.linear(x, params["bottleneck.0.W"], params["bottleneck.0.b"])
    hidden = ops.ACTIVATIONS[activation](hidden)
    return ops.linear(hidden, params["bottleneck.1.W"], params["bottleneck.1.b"])
