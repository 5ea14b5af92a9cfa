# graph_core/shift.py
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from errors import DegenerateGraphError, StructuralError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-9
DENSE_EIG_LIMIT = 500


# ─────────── shift operator ───────────────────────────────────────────────
@dataclass(frozen=True)
class GraphShift:
    """
    Sparse symmetric graph shift operator S.

    Parameters
    ----------
    n_nodes : int
        Number of nodes N.
    matrix : scipy.sparse.csr_matrix
        N×N CSR matrix with sorted indices and a read-only data buffer.
    spectral_norm : float
        Largest absolute eigenvalue of ``matrix``.
    """

    n_nodes: int
    matrix: sp.csr_matrix
    spectral_norm: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Return S @ x for an N×F dense block."""
        if x.shape[0] != self.n_nodes:
            raise StructuralError(
                f"shift expects {self.n_nodes} rows, got {x.shape[0]}"
            )
        return np.asarray(self.matrix @ x)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node (row sums of S)."""
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def entries(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        return [(int(r), int(c), float(w)) for r, c, w in zip(coo.row, coo.col, coo.data)]

    def permuted(self, perm: np.ndarray) -> "GraphShift":
        """Relabel nodes so that new node ``i`` is old node ``perm[i]``."""
        p = np.asarray(perm)
        m = self.matrix[p][:, p].tocsr()
        return GraphShift(self.n_nodes, _freeze(m), self.spectral_norm)


def _freeze(m: sp.spmatrix) -> sp.csr_matrix:
    csr = sp.csr_matrix(m, dtype=np.float64, copy=True)
    csr.eliminate_zeros()
    csr.sort_indices()
    csr.data.flags.writeable = False
    return csr


def spectral_norm(matrix: sp.spmatrix) -> float:
    """
    Largest absolute eigenvalue of a symmetric matrix.

    Dense eigensolve up to DENSE_EIG_LIMIT nodes, seeded Lanczos above.
    """
    n = matrix.shape[0]
    if matrix.nnz == 0:
        return 0.0
    if n <= DENSE_EIG_LIMIT:
        return float(np.max(np.abs(np.linalg.eigvalsh(matrix.toarray()))))
    v0 = np.random.default_rng(0).standard_normal(n)
    (lam,) = eigsh(matrix, k=1, which="LM", v0=v0, tol=0.0, return_eigenvectors=False)
    return float(abs(lam))


def build_shift(adjacency, normalize: bool = True) -> GraphShift:
    """
    Build a GraphShift from a dense or sparse symmetric adjacency.

    The diagonal is removed; with ``normalize`` every entry is divided by
    the spectral norm so that the result has spectral norm one.
    """
    if sp.issparse(adjacency):
        m = sp.csr_matrix(adjacency, dtype=np.float64)
        data = m.data
    else:
        arr = np.asarray(adjacency, dtype=np.float64)
        if arr.ndim != 2:
            raise StructuralError(f"adjacency must be 2-D, got ndim={arr.ndim}")
        m = sp.csr_matrix(arr)
        data = arr
    rows, cols = m.shape
    if rows != cols:
        raise StructuralError(f"adjacency must be square, got {rows}x{cols}")
    if not np.all(np.isfinite(data)):
        raise StructuralError("adjacency holds non-finite entries")
    asym = abs(m - m.T)
    if asym.nnz and asym.max() > SYMMETRY_TOL:
        raise StructuralError(
            f"adjacency is not symmetric (max |A - A^T| = {asym.max():.3g})"
        )

    m = m.tolil()
    m.setdiag(0.0)
    m = m.tocsr()
    m.eliminate_zeros()
    if m.nnz == 0:
        raise DegenerateGraphError("adjacency has no off-diagonal weight")

    # exact symmetry after the tolerance check
    m = (m + m.T) * 0.5
    rho = spectral_norm(m)
    if normalize:
        m = m / rho
        rho = 1.0
    logger.debug("built shift: n=%d nnz=%d norm=%.6g", rows, m.nnz, rho)
    return GraphShift(rows, _freeze(m), float(rho))
