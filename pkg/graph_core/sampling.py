# graph_core/sampling.py
"""
Node selection, nested sampling matrices and zero-padding.

A ``SelectionMatrix`` C picks ``n_out`` of ``n_in`` rows; a ``NestedSampler``
D is the product of the per-level selections and maps the original graph
to the nodes that survive at a given depth.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from errors import ArgumentError, StructuralError
from graph_core.shift import GraphShift

logger = logging.getLogger(__name__)


# ─────────── selection matrices ───────────────────────────────────────────
@dataclass(frozen=True)
class SelectionMatrix:
    """Binary fat matrix with one 1 per row; kept indices strictly increasing."""

    n_in: int
    kept_indices: tuple[int, ...]

    def __post_init__(self):
        kept = tuple(int(i) for i in self.kept_indices)
        object.__setattr__(self, "kept_indices", kept)
        if self.n_in < 1:
            raise StructuralError(f"selection needs n_in >= 1, got {self.n_in}")
        if not kept:
            raise StructuralError("selection must keep at least one node")
        if kept[0] < 0 or kept[-1] >= self.n_in:
            raise StructuralError(f"kept indices out of range [0, {self.n_in})")
        if any(b <= a for a, b in zip(kept, kept[1:])):
            raise StructuralError("kept indices must be strictly increasing")

    @property
    def n_out(self) -> int:
        return len(self.kept_indices)

    @property
    def index(self) -> np.ndarray:
        return np.asarray(self.kept_indices, dtype=np.intp)

    @property
    def is_identity(self) -> bool:
        return self.n_out == self.n_in

    @classmethod
    def identity(cls, n: int) -> "SelectionMatrix":
        return cls(n, tuple(range(n)))

    def dense(self) -> np.ndarray:
        c = np.zeros((self.n_out, self.n_in))
        c[np.arange(self.n_out), self.index] = 1.0
        return c

    def sparse(self) -> sp.csr_matrix:
        ones = np.ones(self.n_out)
        return sp.csr_matrix(
            (ones, (np.arange(self.n_out), self.index)), shape=(self.n_out, self.n_in)
        )

    # serialized as one line of kept indices
    def to_line(self) -> str:
        return " ".join(str(i) for i in self.kept_indices)

    @classmethod
    def from_line(cls, line: str, n_in: int) -> "SelectionMatrix":
        try:
            kept = tuple(int(tok) for tok in line.split())
        except ValueError as exc:
            raise StructuralError(f"bad selection line: {line!r}") from exc
        return cls(n_in, kept)


@dataclass(frozen=True)
class NestedSampler:
    """D_b = C_b C_{b-1} ... C_1, stored as the selection it amounts to."""

    depth: int
    selector: SelectionMatrix

    @property
    def n_out(self) -> int:
        return self.selector.n_out

    @property
    def n_nodes(self) -> int:
        return self.selector.n_in

    @property
    def kept_indices(self) -> tuple[int, ...]:
        return self.selector.kept_indices

    @property
    def index(self) -> np.ndarray:
        return self.selector.index

    @property
    def is_identity(self) -> bool:
        return self.selector.is_identity

    def dense(self) -> np.ndarray:
        return self.selector.dense()

    @classmethod
    def identity(cls, n: int) -> "NestedSampler":
        return cls(0, SelectionMatrix.identity(n))


# ─────────── selection rules ──────────────────────────────────────────────
def _keep_by_degree(degrees: np.ndarray, n_keep: int) -> np.ndarray:
    n = degrees.shape[0]
    if not 1 <= n_keep <= n:
        raise ArgumentError(f"n_keep must lie in [1, {n}], got {n_keep}")
    # drop order: smallest degree first, larger index first on ties
    order = sorted(range(n), key=lambda i: (degrees[i], -i))
    dropped = set(order[: n - n_keep])
    return np.array([i for i in range(n) if i not in dropped], dtype=np.intp)


def select_by_degree(shift: GraphShift, n_keep: int) -> SelectionMatrix:
    """
    Keep the ``n_keep`` nodes of highest weighted degree.

    Degrees are computed once on ``shift`` and not updated as nodes are
    dropped; ties drop the largest index first.
    """
    kept = _keep_by_degree(shift.degrees(), n_keep)
    return SelectionMatrix(shift.n_nodes, tuple(kept))


def compose_nested(
    selections: Sequence[SelectionMatrix], n_nodes: int | None = None
) -> NestedSampler:
    """Multiply per-level selections into the nested sampler D_b."""
    if not selections:
        if n_nodes is None:
            raise ArgumentError("n_nodes is required to build a depth-0 sampler")
        return NestedSampler.identity(n_nodes)
    if n_nodes is not None and selections[0].n_in != n_nodes:
        raise StructuralError(
            f"first selection expects {selections[0].n_in} nodes, graph has {n_nodes}"
        )
    kept = selections[0].index
    for level, sel in enumerate(selections[1:], start=2):
        if sel.n_in != kept.shape[0]:
            raise StructuralError(
                f"selection {level} expects {sel.n_in} inputs, "
                f"previous level keeps {kept.shape[0]}"
            )
        kept = kept[sel.index]
    return NestedSampler(len(selections), SelectionMatrix(selections[0].n_in, tuple(kept)))


def plan_node_counts(n_nodes: int, ratios: Sequence[float]) -> list[int]:
    """N_0..N_B from per-level keep ratios (N_b = round(ratio_b * N_{b-1}))."""
    counts = [int(n_nodes)]
    for r in ratios:
        if not 0.0 < r <= 1.0:
            raise ArgumentError(f"node ratio must lie in (0, 1], got {r}")
        counts.append(max(1, int(round(counts[-1] * r))))
    return counts


def build_selections(
    shift: GraphShift, node_counts: Sequence[int]
) -> tuple[list[SelectionMatrix], list[NestedSampler]]:
    """
    Degree-based C_1..C_B and nested D_0..D_B for a node-count plan.

    Each level ranks the survivors of the previous level by their degree
    in the induced subgraph.
    """
    if not node_counts or node_counts[0] != shift.n_nodes:
        raise StructuralError("node_counts must start with the graph size")
    if any(b > a for a, b in zip(node_counts, node_counts[1:])):
        raise StructuralError(f"node counts must be non-increasing: {list(node_counts)}")
    selections: list[SelectionMatrix] = []
    samplers = [NestedSampler.identity(shift.n_nodes)]
    for n_keep in node_counts[1:]:
        survivors = samplers[-1].index
        sub = shift.matrix[survivors][:, survivors]
        degrees = np.asarray(sub.sum(axis=1)).ravel()
        kept = _keep_by_degree(degrees, n_keep)
        selections.append(SelectionMatrix(len(survivors), tuple(kept)))
        samplers.append(compose_nested(selections))
    logger.debug("node plan %s", [s.n_out for s in samplers])
    return selections, samplers


def selections_from_kept(
    kept_per_level: Sequence[Sequence[int]], n_nodes: int
) -> list[SelectionMatrix]:
    """Rebuild C_1..C_B from the original-graph survivors of every level."""
    selections = []
    previous = np.arange(n_nodes)
    for kept in kept_per_level:
        kept_sorted = np.sort(np.asarray(kept, dtype=np.intp))
        position = {int(node): i for i, node in enumerate(previous)}
        try:
            local = [position[int(node)] for node in kept_sorted]
        except KeyError as exc:
            raise StructuralError(f"node {exc.args[0]} was dropped at an earlier level") from exc
        selections.append(SelectionMatrix(len(previous), tuple(local)))
        previous = kept_sorted
    return selections


# ─────────── zero padding / downsampling ─────────────────────────────────
def _check_2d(x: np.ndarray, rows: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != rows:
        raise StructuralError(f"{what} expects a {rows}-row matrix, got shape {x.shape}")
    return x


def zero_pad(sampler: NestedSampler, x_sub: np.ndarray) -> np.ndarray:
    """D^T X_b: kept rows in order, zeros for every dropped node."""
    x_sub = _check_2d(x_sub, sampler.n_out, "zero_pad")
    out = np.zeros((sampler.n_nodes, x_sub.shape[1]))
    out[sampler.index] = x_sub
    return out


def downsample(sampler: NestedSampler, x_full: np.ndarray) -> np.ndarray:
    """D X: rows at the kept indices."""
    x_full = _check_2d(x_full, sampler.n_nodes, "downsample")
    return x_full[sampler.index].copy()


def reduced_shift(sampler: NestedSampler, shift: GraphShift, gamma: int, k: int) -> np.ndarray:
    """D (S^gamma)^k D^T via gamma*k sparse shifts of the columns of D^T."""
    if gamma < 1:
        raise ArgumentError(f"stride gamma must be >= 1, got {gamma}")
    if k < 0:
        raise ArgumentError(f"power k must be >= 0, got {k}")
    if sampler.n_nodes != shift.n_nodes:
        raise StructuralError(
            f"sampler covers {sampler.n_nodes} nodes, shift has {shift.n_nodes}"
        )
    z = zero_pad(sampler, np.eye(sampler.n_out))
    for _ in range(gamma * k):
        z = shift.apply(z)
    return z[sampler.index]
