# ugnn_model/model.py
from __future__ import annotations

import logging
from typing import Mapping, Sequence

import numpy as np

from autodiff import ops
from autodiff.params import ParameterStore
from autodiff.tape import Tape, Tensor
from errors import ArgumentError, NumericError, StructuralError
from graph_core.sampling import (
    NestedSampler,
    SelectionMatrix,
    build_selections,
    compose_nested,
    selections_from_kept,
)
from graph_core.shift import GraphShift
from ugnn_model.config import UGNNConfig
from ugnn_model.layers import (
    Resolution,
    bottleneck_mlp,
    decoder_block,
    encoder_block,
    input_embedding,
    layer_param_names,
)

logger = logging.getLogger(__name__)


# ─────────── parameter plan ───────────────────────────────────────────────
def param_shapes(cfg: UGNNConfig) -> dict[str, tuple[int, int]]:
    """Shape of every learnable tensor, in construction order."""
    f, half = cfg.feature_widths, cfg.embed_width
    shapes: dict[str, tuple[int, int]] = {
        "read_in.W": (cfg.target_width, f[0]),
        "read_in.b": (1, f[0]),
        "embed_x.W": (f[0], half),
        "embed_x.b": (1, half),
    }
    if cfg.conditioning_width:
        shapes["embed_u.W"] = (cfg.conditioning_width, half)
        shapes["embed_u.b"] = (1, half)

    def block(prefix: str, width_in: int, width_out: int) -> None:
        for layer, k in enumerate(cfg.filter_taps):
            w_in = width_in if layer == 0 else width_out
            names = layer_param_names(prefix, layer, k, cfg.normalization == "layer")
            for name in names[: k + 1]:
                shapes[name] = (w_in, width_out)
            for name in names[k + 1 :]:
                shapes[name] = (1, width_out)

    for b in range(1, cfg.depth + 1):
        block(f"enc.{b}", f[b - 1], f[b])
    fb = f[cfg.depth]
    shapes.update({
        "bottleneck.0.W": (fb, fb),
        "bottleneck.0.b": (1, fb),
        "bottleneck.1.W": (fb, fb),
        "bottleneck.1.b": (1, fb),
    })
    for b in range(cfg.depth, 0, -1):
        block(f"dec.{b}", 2 * f[b], f[b - 1])
    shapes["read_out.W"] = (f[0], cfg.target_width)
    shapes["read_out.b"] = (1, cfg.target_width)
    return shapes


def init_params(cfg: UGNNConfig, rng: np.random.Generator) -> ParameterStore:
    store = ParameterStore()
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "gain":
            value = np.ones(shape)
        elif leaf in ("b", "bias"):
            value = np.zeros(shape)
        elif leaf.startswith("H_k"):
            layer_taps = cfg.filter_taps[int(name.split(".")[3])] + 1
            value = rng.normal(0.0, np.sqrt(1.0 / (shape[0] * layer_taps)), size=shape)
        else:
            value = rng.normal(0.0, np.sqrt(1.0 / shape[0]), size=shape)
        store.add(name, value)
    return store


# ─────────── model ────────────────────────────────────────────────────────
class UGNN:
    """
    U-shaped GNN noise predictor eps_theta(x_t, t; S, u).

    Parameters
    ----------
    config : UGNNConfig
        Architecture.
    shift : GraphShift
        Shift operator of the original graph.
    selections : sequence of SelectionMatrix
        C_1..C_B; ``selections[b-1]`` maps N_{b-1} nodes to N_b.
    params : ParameterStore, optional
        Learnable tensors; freshly initialised from ``seed`` when omitted.
    """

    def __init__(
        self,
        config: UGNNConfig,
        shift: GraphShift,
        selections: Sequence[SelectionMatrix],
        params: ParameterStore | None = None,
        seed: int = 0,
    ):
        if shift.n_nodes != config.n_nodes:
            raise StructuralError(f"config expects {config.n_nodes} nodes, shift has {shift.n_nodes}")
        if len(selections) != config.depth:
            raise StructuralError(f"need {config.depth} selections, got {len(selections)}")
        for b, sel in enumerate(selections, start=1):
            if (sel.n_in, sel.n_out) != (config.node_counts[b - 1], config.node_counts[b]):
                raise StructuralError(
                    f"selection {b} maps {sel.n_in}->{sel.n_out}, config says "
                    f"{config.node_counts[b - 1]}->{config.node_counts[b]}"
                )
        self.config = config
        self.shift = shift
        self.selections = list(selections)
        self.samplers: list[NestedSampler] = [NestedSampler.identity(shift.n_nodes)] + [
            compose_nested(self.selections[:b], shift.n_nodes) for b in range(1, config.depth + 1)
        ]
        self.params = params if params is not None else init_params(config, np.random.default_rng(seed))
        expected = param_shapes(config)
        if sorted(expected) != self.params.names():
            raise StructuralError("parameter store does not match the architecture")
        self._resolutions: dict[tuple[int, int], Resolution] = {}
        logger.info(
            "U-GNN: depth=%d nodes=%s widths=%s parameters=%d",
            config.depth, list(config.node_counts), list(config.feature_widths),
            self.params.num_parameters(),
        )

    @classmethod
    def build(cls, config: UGNNConfig, shift: GraphShift, seed: int = 0) -> "UGNN":
        """Degree-based node selection followed by random initialisation."""
        selections, _ = build_selections(shift, config.node_counts)
        return cls(config, shift, selections, seed=seed)

    def num_parameters(self) -> int:
        return self.params.num_parameters()

    def resolution(self, depth: int, batch: int) -> Resolution:
        key = (depth, batch)
        if key not in self._resolutions:
            self._resolutions[key] = Resolution(self.shift, self.samplers[depth], batch)
        return self._resolutions[key]

    # ── forward ────────────────────────────────────────────────────────────
    def forward(
        self,
        tape: Tape,
        params: Mapping[str, Tensor],
        x_t: np.ndarray,
        t,
        u: np.ndarray | None = None,
    ) -> Tensor:
        """
        Record one forward pass for a batch.

        ``x_t`` is (batch, N, F), ``t`` one step per batch element and ``u``
        (batch, N, U). Returns the (batch * N) x F prediction.
        """
        cfg = self.config
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.ndim == 2:
            x_t = x_t[None]
        m, n, f = x_t.shape
        if (n, f) != (cfg.n_nodes, cfg.target_width):
            raise StructuralError(f"x_t must be (*, {cfg.n_nodes}, {cfg.target_width}), got {x_t.shape}")
        steps = np.broadcast_to(np.asarray(t, dtype=np.float64), (m,))
        u_t = None
        if u is not None and cfg.conditioning_width == 0:
            raise ArgumentError("model is unconditional but u was given")
        if u is not None:
            u = np.asarray(u, dtype=np.float64)
            u_t = tape.constant(u.reshape(m * n, -1))

        x = tape.constant(x_t.reshape(m * n, f))
        x0 = ops.linear(x, params["read_in.W"], params["read_in.b"])
        v = input_embedding(x0, np.repeat(steps, n), u_t, params, cfg)

        skips = []
        for b in range(1, cfg.depth + 1):
            v = encoder_block(v, self.selections[b - 1], self.resolution(b, m), params, f"enc.{b}", cfg)
            skips.append(v)
        y = bottleneck_mlp(v, params, cfg.activation)
        for b in range(cfg.depth, 0, -1):
            y = decoder_block(
                y, skips[b - 1], self.selections[b - 1], self.resolution(b - 1, m), params, f"dec.{b}", cfg
            )
        return ops.linear(y, params["read_out.W"], params["read_out.b"])

    def predict(self, x_t: np.ndarray, t, u: np.ndarray | None = None) -> np.ndarray:
        """Gradient-free evaluation; output has the shape of ``x_t``."""
        x_t = np.asarray(x_t, dtype=np.float64)
        tape = Tape()
        out = self.forward(tape, tape.watch(self.params, requires_grad=False), x_t, t, u)
        result = out.data.reshape(x_t.shape)
        if not np.all(np.isfinite(result)):
            raise NumericError("U-GNN produced non-finite output")
        return result.copy()

    def permuted(self, perm: np.ndarray) -> "UGNN":
        """Same parameters on a relabelled graph (new node i = old node perm[i])."""
        perm = np.asarray(perm, dtype=np.intp)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(perm.shape[0])
        kept = [inverse[np.asarray(s.kept_indices, dtype=np.intp)] for s in self.samplers[1:]]
        selections = selections_from_kept(kept, self.shift.n_nodes)
        return UGNN(self.config, self.shift.permuted(perm), selections, params=self.params)
