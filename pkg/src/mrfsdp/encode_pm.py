"""Sign-vector encoding of the MRF energy.

Each node variable becomes a block of K entries in {-1,+1} with exactly one
+1 (block i occupies indices [i*K, i*K + K)); a homogenizing +1 entry is
appended.  For the resulting vector y of length N*K + 1,

    energy(x) = y^T L y + offset

holds for every valid assignment, with L = [[A, b], [b^T, 0]] sparse
symmetric.  With one-hot-in-signs blocks, x~_i . x~_j equals K when the two
labels agree and K - 4 otherwise, so each stored undirected edge contributes
-(w/4) * x~_i . x~_j to the quadratic form (split as -w/8 per matrix
orientation) plus a constant w*K/4; each unary term contributes -(w/4) at
entry (i*K + label, last) of L, twice by symmetry, plus a constant w/2.

Feasibility of y is the per-node sum constraint 1^T x~_i = 2 - K, written
trace(U_i y y^T) = 2 - K with U_i = [[0, 0], [u_i^T, 0]]; the trace reduces
to a block sum over the last column, which is how it is evaluated here (U_i
is never materialized).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleAssignmentError, InvalidInputError
from .mrf import MrfInstance


@dataclass(frozen=True)
class PmEncoding:
    num_nodes: int
    num_labels: int
    L: sp.csr_matrix
    offset: float

    @property
    def dim(self) -> int:
        return self.num_nodes * self.num_labels + 1

    @property
    def rhs(self) -> float:
        """Per-node sum-constraint right-hand side, 2 - K."""
        return float(2 - self.num_labels)

    def block(self, i: int) -> slice:
        k = self.num_labels
        return slice(i * k, (i + 1) * k)


def encode_pm(mrf: MrfInstance) -> PmEncoding:
    n, k = mrf.num_nodes, mrf.num_labels
    dim = n * k + 1
    last = dim - 1
    rows, cols, vals = [], [], []
    offset = 0.0
    for t in mrf.unary:
        p = t.node * k + t.label
        rows += [p, last]
        cols += [last, p]
        vals += [-t.weight / 4.0, -t.weight / 4.0]
        offset += t.weight / 2.0
    for t in mrf.binary:
        for c in range(k):
            p, q = t.i * k + c, t.j * k + c
            rows += [p, q]
            cols += [q, p]
            vals += [-t.weight / 8.0, -t.weight / 8.0]
        offset += t.weight * k / 4.0
    L = sp.coo_matrix(
        (np.array(vals), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=(dim, dim),
    ).tocsr()
    return PmEncoding(num_nodes=n, num_labels=k, L=L, offset=offset)


def labeling_to_pm(labeling, num_nodes: int, num_labels: int) -> np.ndarray:
    """Sign vector with +1 at each node's label position, homogenized."""
    x = np.asarray(labeling, dtype=int)
    if x.shape != (num_nodes,):
        raise InvalidInputError("labeling length mismatch")
    if x.size and (x.min() < 0 or x.max() >= num_labels):
        raise InvalidInputError("label out of range")
    y = -np.ones(num_nodes * num_labels + 1)
    y[np.arange(num_nodes) * num_labels + x] = 1.0
    y[-1] = 1.0
    return y


def pm_to_labeling(y, num_nodes: int, num_labels: int) -> np.ndarray:
    """Inverse of labeling_to_pm; rejects blocks without exactly one +1."""
    y = np.asarray(y, dtype=float)
    if y.shape != (num_nodes * num_labels + 1,):
        raise InvalidInputError("sign vector length mismatch")
    if np.max(np.abs(np.abs(y) - 1.0)) > 1e-9:
        raise InfeasibleAssignmentError("entries must be +/-1")
    blocks = y[:-1].reshape(num_nodes, num_labels)
    pos_counts = (blocks > 0).sum(axis=1)
    if np.any(pos_counts != 1):
        raise InfeasibleAssignmentError(
            "each node block must have exactly one +1 entry"
        )
    return blocks.argmax(axis=1)


def constraint_value(i: int, Y_or_y, num_labels: int) -> float:
    """trace(U_i Y) evaluated as the block sum of the last column.

    Accepts a symmetric matrix Y or a vector y (then Y = y y^T implicitly).
    """
    a = np.asarray(Y_or_y)
    k = num_labels
    blk = slice(i * k, (i + 1) * k)
    if a.ndim == 2:
        return float(a[blk, -1].sum())
    return float(a[blk].sum() * a[-1])
