"""Row-stochastic sparse matrices, distribution evolution, stationary vectors.

Distributions are plain 1-D numpy arrays. The walk convention matches the
graph module: a chain at state i steps to j with probability M[i, j].
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DanglingNode, NotErgodic, NotStochastic
from .graphs import DirectedGraph, scc_decompose

ROW_SUM_TOL = 1e-9
DIST_SUM_TOL = 1e-12
RENORM_LIMIT = 1e-6


class StochasticMatrix:
    """Sparse row-stochastic matrix (rows sum to 1 within 1e-9, entries >= 0).

    `renormalize=True` rescales rows whose sums drift by less than 1e-6,
    which absorbs float noise after Kronecker assembly.
    """

    __slots__ = ("n", "csr")

    def __init__(self, matrix, tol: float = ROW_SUM_TOL, renormalize: bool = False):
        csr = sp.csr_matrix(matrix, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got {csr.shape}")
        csr.eliminate_zeros()
        if renormalize:
            sums = np.asarray(csr.sum(axis=1)).ravel()
            drift = np.abs(sums - 1.0)
            fix = (drift > 0) & (drift < RENORM_LIMIT) & (sums > 0)
            if fix.any():
                scale = np.ones_like(sums)
                scale[fix] = 1.0 / sums[fix]
                csr = sp.diags(scale) @ csr
                csr = sp.csr_matrix(csr)
        validate_stochastic(csr, tol)
        self.n = csr.shape[0]
        self.csr = csr

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def row(self, i: int) -> np.ndarray:
        return np.asarray(self.csr.getrow(i).todense()).ravel()

    def dense(self) -> np.ndarray:
        return self.csr.toarray()

    def to_graph(self) -> DirectedGraph:
        """Nonzero pattern as a directed graph (edge i->j iff M[i,j] > 0)."""
        coo = self.csr.tocoo()
        return DirectedGraph(self.n,
                             list(zip(coo.row.tolist(), coo.col.tolist())),
                             coo.data.tolist())

    def minor(self, rows, cols=None) -> sp.csr_matrix:
        rows = np.asarray(rows, dtype=np.int64)
        cols = rows if cols is None else np.asarray(cols, dtype=np.int64)
        return self.csr[rows][:, cols]

    def __repr__(self):
        return f"StochasticMatrix(n={self.n}, nnz={self.nnz})"


def validate_stochastic(matrix, tol: float = ROW_SUM_TOL) -> bool:
    """Pass iff all entries are >= 0 and every row sums to 1 within tol.

    Raises NotStochastic naming the first offending row.
    """
    csr = matrix.csr if isinstance(matrix, StochasticMatrix) else sp.csr_matrix(matrix)
    if csr.nnz and csr.data.min() < 0:
        bad = int(np.searchsorted(csr.indptr, np.argmin(csr.data), side="right") - 1)
        raise NotStochastic(bad, "negative entry")
    sums = np.asarray(csr.sum(axis=1)).ravel()
    off = np.abs(sums - 1.0)
    if off.size and off.max() > tol:
        bad = int(np.argmax(off))
        raise NotStochastic(bad, f"row sum {sums[bad]:.12g}")
    return True


def equal_weight_matrix(graph: DirectedGraph) -> StochasticMatrix:
    """Transition matrix that spreads each row over the node's out-edges.

    Unweighted edges get 1/outdeg(i); weighted graphs (e.g. after lazify) are
    row-normalized. A node with no out-edge raises DanglingNode.
    """
    n = graph.node_count
    deg = np.diff(graph._indptr)
    if n and deg.min() == 0:
        raise DanglingNode(int(np.argmin(deg)))
    if graph.weights is None:
        data = 1.0 / deg[graph.sources]
    else:
        row_tot = np.zeros(n)
        np.add.at(row_tot, graph.sources, graph.weights)
        if n and row_tot.min() <= 0:
            raise DanglingNode(int(np.argmin(row_tot)))
        data = graph.weights / row_tot[graph.sources]
    csr = sp.csr_matrix((data, (graph.sources, graph.targets)), shape=(n, n))
    return StochasticMatrix(csr)


def validate_distribution(vec, tol: float = DIST_SUM_TOL) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).ravel()
    if v.size and v.min() < 0:
        raise ValueError(f"negative mass at index {int(np.argmin(v))}")
    if abs(v.sum() - 1.0) > tol:
        raise ValueError(f"mass sums to {v.sum():.15g}, expected 1")
    return v


def evolve(dist, matrix: StochasticMatrix, steps: int = 1) -> np.ndarray:
    """Left-evolve a distribution: returns v' M^k as a dense vector."""
    v = np.asarray(dist, dtype=np.float64).ravel()
    if v.size != matrix.n:
        raise ValueError(f"dimension mismatch: {v.size} vs {matrix.n}")
    mt = matrix.csr.T.tocsr()
    for _ in range(int(steps)):
        v = mt @ v
    return v


def tv_distance(p, q) -> float:
    """Total variation distance, computed as half the L1 distance."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.size != q.size:
        raise ValueError(f"dimension mismatch: {p.size} vs {q.size}")
    return 0.5 * float(np.abs(p - q).sum())


def ergodicity_check(matrix: StochasticMatrix) -> None:
    """Raise NotErgodic unless the chain is irreducible and aperiodic."""
    decomp = scc_decompose(matrix.to_graph())
    if decomp.count != 1:
        raise NotErgodic(f"chain is reducible ({decomp.count} components)")
    if decomp.periods[0] != 1:
        raise NotErgodic(f"chain is periodic (period {decomp.periods[0]})")


def stationary(matrix: StochasticMatrix, tol: float = 1e-12,
               max_iter: int = 10_000_000, check: bool = True) -> np.ndarray:
    """Stationary distribution by left power iteration with normalization.

    Stops when the L1 residual of pi'M - pi' drops below tol; deterministic
    (starts from uniform). Periodic or reducible chains raise NotErgodic.
    """
    if check:
        ergodicity_check(matrix)
    n = matrix.n
    mt = matrix.csr.T.tocsr()
    v = np.full(n, 1.0 / n)
    for _ in range(int(max_iter)):
        w = mt @ v
        if np.abs(w - v).sum() <= tol:  # certified: ||v'M - v'||_1 <= tol
            return v
        v = w / w.sum()
    raise NotErgodic(f"power iteration residual above {tol} after {max_iter} steps")
