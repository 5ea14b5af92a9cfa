from graph_core.shift import GraphShift, build_shift, spectral_norm
from graph_core.sampling import (
    NestedSampler,
    SelectionMatrix,
    build_selections,
    compose_nested,
    downsample,
    plan_node_counts,
    reduced_shift,
    select_by_degree,
    selections_from_kept,
    zero_pad,
)

__all__ = [
    "GraphShift",
    "NestedSampler",
    "SelectionMatrix",
    "build_selections",
    "build_shift",
    "compose_nested",
    "downsample",
    "plan_node_counts",
    "reduced_shift",
    "select_by_degree",
    "selections_from_kept",
    "spectral_norm",
    "zero_pad",
]
