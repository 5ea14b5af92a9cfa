# ugnn_model/config.py
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

from errors import ArgumentError, StructuralError

ACTIVATIONS = ("relu", "silu", "identity")
NORMALIZATIONS = ("layer", "none")
VIEWPOINTS = ("zero_pad", "reduced")


@dataclass(frozen=True)
class UGNNConfig:
    """
    Architecture of the U-GNN noise predictor.

    ``feature_widths`` and ``node_counts`` both hold B + 1 entries
    (F_0..F_B and N_0..N_B); ``filter_taps`` holds K for each of the L
    layers of a block.
    """

    depth: int
    layers_per_block: int
    filter_taps: tuple[int, ...]
    stride: int
    feature_widths: tuple[int, ...]
    node_counts: tuple[int, ...]
    target_width: int
    conditioning_width: int = 0
    activation: str = "silu"
    normalization: str = "layer"
    viewpoint: str = "zero_pad"

    def __post_init__(self):
        for name in ("filter_taps", "feature_widths", "node_counts"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        b = self.depth
        if b < 1:
            raise ArgumentError(f"depth must be >= 1, got {b}")
        if self.layers_per_block < 1:
            raise ArgumentError("layers_per_block must be >= 1")
        if len(self.filter_taps) != self.layers_per_block:
            raise StructuralError(
                f"need {self.layers_per_block} filter tap counts, got {len(self.filter_taps)}"
            )
        if any(k < 0 for k in self.filter_taps):
            raise ArgumentError("filter taps must be >= 0")
        if self.stride < 1:
            raise ArgumentError(f"stride must be >= 1, got {self.stride}")
        if len(self.feature_widths) != b + 1 or len(self.node_counts) != b + 1:
            raise StructuralError("feature_widths and node_counts need depth + 1 entries")
        f = self.feature_widths
        if any(lo >= hi for hi, lo in zip(f, f[1:])) or f[-1] < 1:
            raise StructuralError(f"feature widths must strictly decrease: {f}")
        if f[0] % 2:
            raise StructuralError(f"F_0 must be even, got {f[0]}")
        n = self.node_counts
        if any(lo > hi for hi, lo in zip(n, n[1:])) or n[-1] < 1:
            raise StructuralError(f"node counts must be non-increasing: {n}")
        if self.target_width < 1 or self.conditioning_width < 0:
            raise ArgumentError("target_width must be >= 1 and conditioning_width >= 0")
        if self.activation not in ACTIVATIONS:
            raise ArgumentError(f"activation must be one of {ACTIVATIONS}")
        if self.normalization not in NORMALIZATIONS:
            raise ArgumentError(f"normalization must be one of {NORMALIZATIONS}")
        if self.viewpoint not in VIEWPOINTS:
            raise ArgumentError(f"viewpoint must be one of {VIEWPOINTS}")

    @property
    def n_nodes(self) -> int:
        return self.node_counts[0]

    @property
    def embed_width(self) -> int:
        return self.feature_widths[0] // 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "UGNNConfig":
        return cls(**data)

    @classmethod
    def halving(
        cls,
        node_counts: Sequence[int],
        f0: int,
        target_width: int,
        conditioning_width: int = 0,
        layers_per_block: int = 2,
        taps: int = 2,
        **kwargs,
    ) -> "UGNNConfig":
        """F_0 halved at every depth; depth taken from ``node_counts``."""
        depth = len(node_counts) - 1
        widths = tuple(f0 // (2**b) for b in range(depth + 1))
        return cls(
            depth=depth,
            layers_per_block=layers_per_block,
            filter_taps=tuple([taps] * layers_per_block),
            feature_widths=widths,
            node_counts=tuple(node_counts),
            target_width=target_width,
            conditioning_width=conditioning_width,
            stride=kwargs.pop("stride", 1),
            **kwargs,
        )
