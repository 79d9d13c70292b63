"""Product manifold of unit-norm rows with an optional orthonormal block.

Points are (n_sphere_rows + bottom_block_rows) x rank matrices R whose first
n_sphere_rows rows have unit Euclidean norm and whose trailing block B (when
present) satisfies B B^T = I.  This is the feasible set of the low-rank
factorizations used by both relaxations: diag(R R^T) = 1 rows, plus the
orthonormal bottom block for the binary-matrix relaxation.

All operations use the embedded (Frobenius) metric.  The retraction is
metric projection throughout: row normalization for sphere rows and the
polar factor for the bottom block (projection retractions are second order,
which the Taylor-remainder tests rely on).  Cost functions are trace
quadratics f(R) = trace(M R R^T) for sparse symmetric M; the Riemannian
gradient is the tangent projection of 2 M R and the Hessian-vector product
subtracts the standard curvature correction before projecting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateStepError, InvalidInputError

_SPHERE_COLLAPSE_TOL = 1e-14


@dataclass(frozen=True)
class ManifoldShape:
    n_sphere_rows: int
    bottom_block_rows: int
    rank: int

    def __post_init__(self):
        if self.n_sphere_rows < 0 or self.bottom_block_rows < 0:
            raise InvalidInputError("row counts must be nonnegative")
        if self.n_sphere_rows + self.bottom_block_rows < 1:
            raise InvalidInputError("shape must have at least one row")
        if self.rank < 1:
            raise InvalidInputError("rank must be >= 1")
        if self.bottom_block_rows and self.rank < self.bottom_block_rows:
            raise InvalidInputError(
                "orthonormal rows need rank >= bottom_block_rows"
            )

    @property
    def total_rows(self) -> int:
        return self.n_sphere_rows + self.bottom_block_rows

    @property
    def tangent_dim(self) -> int:
        k = self.bottom_block_rows
        return self.n_sphere_rows * (self.rank - 1) + k * self.rank - k * (k + 1) // 2

    def with_rank(self, rank: int) -> "ManifoldShape":
        return ManifoldShape(self.n_sphere_rows, self.bottom_block_rows, rank)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _check_point(shape: ManifoldShape, R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (shape.total_rows, shape.rank):
        raise InvalidInputError(
            f"point has shape {R.shape}, expected {(shape.total_rows, shape.rank)}"
        )
    return R


def _orthonormal_rows(C: np.ndarray) -> np.ndarray:
    """Row-orthonormal factor of C via thin QR with positive-diagonal fix."""
    q, r = np.linalg.qr(C.T)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs[None, :]).T


def _polar_rows(C: np.ndarray) -> np.ndarray:
    """Closest row-orthonormal matrix to C (polar factor via thin SVD)."""
    u, svals, vt = np.linalg.svd(C, full_matrices=False)
    if svals[-1] < _SPHERE_COLLAPSE_TOL:
        raise DegenerateStepError("bottom block lost rank during retraction")
    return u @ vt


def random_point(shape: ManifoldShape, seed_or_rng=0) -> np.ndarray:
    """Gaussian rows normalized to the sphere; Gaussian bottom block
    orthonormalized.  Deterministic per seed."""
    rng = _as_rng(seed_or_rng)
    R = rng.standard_normal((shape.total_rows, shape.rank))
    ns = shape.n_sphere_rows
    norms = np.linalg.norm(R[:ns], axis=1, keepdims=True)
    # resample any (measure-zero) degenerate row
    while np.any(norms < _SPHERE_COLLAPSE_TOL):
        bad = norms[:, 0] < _SPHERE_COLLAPSE_TOL
        R[:ns][bad] = rng.standard_normal((bad.sum(), shape.rank))
        norms = np.linalg.norm(R[:ns], axis=1, keepdims=True)
    R[:ns] /= norms
    if shape.bottom_block_rows:
        R[ns:] = _orthonormal_rows(R[ns:])
    return R


def manifold_residual(shape: ManifoldShape, R) -> float:
    """Max violation of the defining constraints (0 on the manifold)."""
    R = _check_point(shape, R)
    ns = shape.n_sphere_rows
    res = 0.0
    if ns:
        res = float(np.max(np.abs(np.einsum("ij,ij->i", R[:ns], R[:ns]) - 1.0)))
    if shape.bottom_block_rows:
        B = R[ns:]
        res = max(res, float(np.max(np.abs(B @ B.T - np.eye(B.shape[0])))))
    return res


def tangent_residual(shape: ManifoldShape, R, V) -> float:
    """Max violation of the tangency conditions at R."""
    R = _check_point(shape, R)
    V = _check_point(shape, V)
    ns = shape.n_sphere_rows
    res = 0.0
    if ns:
        res = float(np.max(np.abs(np.einsum("ij,ij->i", V[:ns], R[:ns]))))
    if shape.bottom_block_rows:
        B, W = R[ns:], V[ns:]
        res = max(res, float(np.max(np.abs(W @ B.T + B @ W.T))))
    return res


def project_tangent(shape: ManifoldShape, R, ambient) -> np.ndarray:
    """Orthogonal projection of an ambient matrix onto the tangent space."""
    R = _check_point(shape, R)
    V = np.array(ambient, dtype=float, copy=True)
    if V.shape != R.shape:
        raise InvalidInputError("ambient direction shape mismatch")
    ns = shape.n_sphere_rows
    if ns:
        dots = np.einsum("ij,ij->i", V[:ns], R[:ns])
        V[:ns] -= dots[:, None] * R[:ns]
    if shape.bottom_block_rows:
        B = R[ns:]
        S = V[ns:] @ B.T
        S = 0.5 * (S + S.T)
        V[ns:] -= S @ B
    return V


def retract(shape: ManifoldShape, R, tangent) -> np.ndarray:
    """Metric-projection retraction: normalize sphere rows of R + V, take the
    polar factor of the bottom block.  retract(R, 0) returns R exactly."""
    R = _check_point(shape, R)
    V = np.asarray(tangent, dtype=float)
    if V.shape != R.shape:
        raise InvalidInputError("tangent shape mismatch")
    if not V.any():
        return R.copy()
    out = R + V
    ns = shape.n_sphere_rows
    if ns:
        norms = np.linalg.norm(out[:ns], axis=1)
        if np.any(norms < _SPHERE_COLLAPSE_TOL):
            raise DegenerateStepError(
                "retraction collapsed a sphere row", last_point=R
            )
        out[:ns] /= norms[:, None]
    if shape.bottom_block_rows:
        out[ns:] = _polar_rows(out[ns:])
    return out


# --- trace-quadratic costs ------------------------------------------------

def check_symmetric(M, tol: float = 1e-12) -> None:
    """Reject cost matrices that are not numerically symmetric."""
    if sp.issparse(M):
        scale = max(1.0, float(np.max(np.abs(M.data))) if M.nnz else 0.0)
        D = (M - M.T).tocoo()
        err = float(np.max(np.abs(D.data))) if D.nnz else 0.0
    else:
        A = np.asarray(M, dtype=float)
        scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
        err = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if err > tol * scale:
        raise InvalidInputError(f"cost matrix asymmetric (residual {err:.3g})")


def trace_quadratic(M, R) -> float:
    """f(R) = trace(M R R^T)."""
    return float(np.sum(np.asarray(R) * (M @ R)))


def riemannian_gradient(M, shape: ManifoldShape, R) -> np.ndarray:
    """Tangent projection of the ambient gradient 2 M R."""
    check_symmetric(M)
    R = _check_point(shape, R)
    return project_tangent(shape, R, 2.0 * (M @ R))


def _hessian_vec(shape: ManifoldShape, R, V, M, euclid_grad) -> np.ndarray:
    """Hessian-vector product given the precomputed ambient gradient 2 M R."""
    W = 2.0 * (M @ V)
    ns = shape.n_sphere_rows
    if ns:
        w = np.einsum("ij,ij->i", euclid_grad[:ns], R[:ns])
        W[:ns] = W[:ns] - w[:, None] * V[:ns]
    if shape.bottom_block_rows:
        B = R[ns:]
        S = euclid_grad[ns:] @ B.T
        S = 0.5 * (S + S.T)
        W[ns:] = W[ns:] - S @ V[ns:]
    return project_tangent(shape, R, W)


def riemannian_hessian_vec(M, shape: ManifoldShape, R, tangent) -> np.ndarray:
    """Riemannian Hessian of trace(M R R^T) applied to a tangent vector."""
    check_symmetric(M)
    R = _check_point(shape, R)
    V = _check_point(shape, tangent)
    return _hessian_vec(shape, R, V, M, 2.0 * (M @ R))
