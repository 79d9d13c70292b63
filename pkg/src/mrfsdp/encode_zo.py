"""Binary-matrix encoding of the MRF energy.

Node labels become an N x K one-hot matrix X.  With

    G[i, measured_label] accumulating -w   per unary term,
    H[i, j] = H[j, i]    accumulating -w/2 per stored undirected edge,
    offset = sum_u w + sum_e w,

the identity  trace(X^T H X) + trace(G X^T) + offset = energy(x)  holds for
every valid one-hot X.  Homogenizing with V = [X; I_K] gives the single
quadratic form trace(V^T Q V) with

    Q = [[H, G/2], [G^T/2, 0]]   of size (N+K) x (N+K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleAssignmentError, InvalidInputError
from .mrf import MrfInstance


@dataclass(frozen=True)
class ZoEncoding:
    num_nodes: int
    num_labels: int
    Q: sp.csr_matrix
    offset: float

    @property
    def n_top(self) -> int:
        return self.num_nodes

    @property
    def n_bottom(self) -> int:
        return self.num_labels

    @property
    def dim(self) -> int:
        return self.num_nodes + self.num_labels

    def unary_block(self) -> sp.csr_matrix:
        """The N x K unary coefficient matrix (twice the top-right of Q)."""
        n = self.num_nodes
        return (2.0 * self.Q[:n, n:]).tocsr()

    def edge_block(self) -> sp.csr_matrix:
        """The N x N edge coefficient matrix (top-left block of Q)."""
        n = self.num_nodes
        return self.Q[:n, :n].tocsr()


def encode_zo(mrf: MrfInstance) -> ZoEncoding:
    n, k = mrf.num_nodes, mrf.num_labels
    dim = n + k
    rows, cols, vals = [], [], []
    offset = 0.0
    for t in mrf.unary:
        # Q top-right holds G/2
        rows += [t.node, n + t.label]
        cols += [n + t.label, t.node]
        vals += [-t.weight / 2.0, -t.weight / 2.0]
        offset += t.weight
    for t in mrf.binary:
        rows += [t.i, t.j]
        cols += [t.j, t.i]
        vals += [-t.weight / 2.0, -t.weight / 2.0]
        offset += t.weight
    Q = sp.coo_matrix(
        (np.array(vals), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=(dim, dim),
    ).tocsr()
    return ZoEncoding(num_nodes=n, num_labels=k, Q=Q, offset=offset)


def labeling_to_zo(labeling, num_nodes: int, num_labels: int) -> np.ndarray:
    x = np.asarray(labeling, dtype=int)
    if x.shape != (num_nodes,):
        raise InvalidInputError("labeling length mismatch")
    if x.size and (x.min() < 0 or x.max() >= num_labels):
        raise InvalidInputError("label out of range")
    X = np.zeros((num_nodes, num_labels))
    X[np.arange(num_nodes), x] = 1.0
    return X


def zo_to_labeling(X) -> np.ndarray:
    """Per-row argmax of a valid one-hot matrix; rejects non-one-hot rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("assignment matrix must be 2-D")
    is01 = np.all((np.abs(X) < 1e-9) | (np.abs(X - 1.0) < 1e-9))
    if not is01 or np.any(np.abs(X.sum(axis=1) - 1.0) > 1e-9):
        raise InfeasibleAssignmentError("rows must be one-hot")
    return X.argmax(axis=1)


def zo_objective(enc: ZoEncoding, V) -> float:
    """trace(V^T Q V); equals energy - offset at V = [X; I_K] for valid X."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != enc.dim:
        raise InvalidInputError(f"V must have {enc.dim} rows")
    return float(np.sum(V * (enc.Q @ V)))


def lift_labeling(enc: ZoEncoding, labeling) -> np.ndarray:
    """The homogenized assignment V = [X; I_K] for a labeling."""
    X = labeling_to_zo(labeling, enc.num_nodes, enc.num_labels)
    return np.vstack([X, np.eye(enc.num_labels)])
