"""Truncated-Newton trust-region solver and the rank staircase.

tnt_minimize drives trace(M R R^T) down over the product manifold with a
Steihaug-Toint truncated-CG inner solve.  staircase_solve wraps it: solve at
the current rank, test column-rank deficiency of R (the global-optimality
certificate for the lifted SDP), and if the critical point is full rank,
append a zero column and escape along a negative-curvature direction of the
lifted Hessian (found by Lanczos) before re-optimizing at rank r + 1.

Default tolerances follow the reference parameterization: gradient norm
1e-2 (the sign-vector pipeline overrides to 1e-3), eigenvalue tolerance
1e-2, relative decrease 1e-5, 500 outer iterations, initial radius 1,
radius factors 0.25 / 2.5, 2000 CG iterations, eta 0.9.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .manifold import (
    ManifoldShape,
    _as_rng,
    _hessian_vec,
    check_symmetric,
    project_tangent,
    random_point,
    retract,
    trace_quadratic,
)

logger = logging.getLogger(__name__)

# trust-region quality thresholds (standard values; the table's eta drives
# the CG residual test below)
_ACCEPT_RATIO = 0.1
_VERY_SUCCESSFUL_RATIO = 0.9
_CG_THETA = 0.5
_MIN_RADIUS = 1e-14


@dataclass(frozen=True)
class SolverParams:
    grad_norm_tol: float = 1e-2
    eig_tol: float = 1e-2
    rel_func_decrease_tol: float = 1e-5
    max_tnt_iterations: int = 500
    initial_tr_radius: float = 1.0
    tr_decrease_factor: float = 0.25
    tr_increase_factor: float = 2.5
    max_cg_iterations: int = 2000
    cg_success_eta: float = 0.9
    max_staircase_steps: int = 10

    def __post_init__(self):
        positive = (
            self.grad_norm_tol,
            self.eig_tol,
            self.rel_func_decrease_tol,
            self.max_tnt_iterations,
            self.initial_tr_radius,
            self.tr_decrease_factor,
            self.tr_increase_factor,
            self.max_cg_iterations,
            self.cg_success_eta,
            self.max_staircase_steps,
        )
        if any(not (v > 0) for v in positive):
            raise InvalidInputError("solver parameters must be positive")
        if not (self.tr_decrease_factor < 1.0 < self.tr_increase_factor):
            raise InvalidInputError("need 0 < alpha1 < 1 < alpha2")
        if not (self.cg_success_eta < 1.0):
            raise InvalidInputError("need 0 < eta < 1")


@dataclass
class StaircaseResult:
    R_opt: np.ndarray
    objective: float
    rank_history: list = field(default_factory=list)
    certified: bool = False
    min_singular_value_ratio: float = float("nan")
    escape_min_eig: float | None = None


def _inner(a, b) -> float:
    return float(np.sum(a * b))


def _to_boundary(s, d, radius) -> float:
    """Positive tau with ||s + tau d|| = radius (requires ||s|| <= radius)."""
    a = _inner(d, d)
    b = 2.0 * _inner(s, d)
    c = _inner(s, s) - radius * radius
    disc = max(b * b - 4.0 * a * c, 0.0)
    return (-b + math.sqrt(disc)) / (2.0 * a)


def _steihaug(grad, hess_vec, radius, max_iters, eta):
    """Truncated CG on the trust-region model; stops on negative curvature,
    the boundary, or eta-based residual reduction."""
    s = np.zeros_like(grad)
    r = grad.copy()
    d = -grad
    rtr = _inner(r, r)
    r0 = math.sqrt(rtr)
    target = r0 * min(eta, r0 ** _CG_THETA)
    for k in range(max_iters):
        Hd = hess_vec(d)
        dHd = _inner(d, Hd)
        if dHd <= 0.0:
            tau = _to_boundary(s, d, radius)
            return s + tau * d, True, k + 1
        alpha = rtr / dHd
        s_new = s + alpha * d
        if math.sqrt(_inner(s_new, s_new)) >= radius:
            tau = _to_boundary(s, d, radius)
            return s + tau * d, True, k + 1
        r = r + alpha * Hd
        rtr_new = _inner(r, r)
        if math.sqrt(rtr_new) <= target:
            return s_new, False, k + 1
        d = -r + (rtr_new / rtr) * d
        s, rtr = s_new, rtr_new
    return s, False, max_iters


def tnt_minimize(M, shape: ManifoldShape, initial_point, params: SolverParams,
                 verbose: bool = False):
    """Minimize trace(M R R^T) from initial_point.

    Returns (point, objective, grad_norm, iterations).  Accepted steps
    strictly decrease the objective; the radius shrinks by alpha1 on
    rejected steps and grows by alpha2 on very successful boundary steps.
    """
    check_symmetric(M)
    R = np.array(initial_point, dtype=float, copy=True)
    if R.shape != (shape.total_rows, shape.rank):
        raise InvalidInputError("initial point shape mismatch")
    MR = M @ R
    f = float(np.sum(R * MR))
    if not math.isfinite(f):
        raise NumericalFailureError("non-finite objective at start", last_point=R)
    egrad = 2.0 * MR
    grad = project_tangent(shape, R, egrad)
    gnorm = math.sqrt(_inner(grad, grad))
    radius = params.initial_tr_radius
    iterations = 0
    while iterations < params.max_tnt_iterations and gnorm >= params.grad_norm_tol:
        hess = lambda V: _hessian_vec(shape, R, V, M, egrad)
        s, hit_boundary, _ = _steihaug(
            grad, hess, radius, params.max_cg_iterations, params.cg_success_eta
        )
        Hs = hess(s)
        predicted = -(_inner(grad, s) + 0.5 * _inner(s, Hs))
        R_new = retract(shape, R, s)
        f_new = trace_quadratic(M, R_new)
        if not math.isfinite(f_new):
            raise NumericalFailureError("non-finite objective", last_point=R)
        iterations += 1
        rho = (f - f_new) / predicted if predicted > 0.0 else -math.inf
        accepted = rho >= _ACCEPT_RATIO and f_new < f
        if accepted:
            rel_decrease = (f - f_new) / max(1.0, abs(f))
            if rho >= _VERY_SUCCESSFUL_RATIO and hit_boundary:
                radius *= params.tr_increase_factor
            R, f = R_new, f_new
            MR = M @ R
            egrad = 2.0 * MR
            grad = project_tangent(shape, R, egrad)
            gnorm = math.sqrt(_inner(grad, grad))
            if verbose:
                logger.info(
                    "tnt iter=%d accepted=1 f=%.12g grad_norm=%.6g radius=%.6g rank=%d",
                    iterations, f, gnorm, radius, shape.rank,
                )
            if rel_decrease < params.rel_func_decrease_tol:
                break
        else:
            radius *= params.tr_decrease_factor
            if verbose:
                logger.info(
                    "tnt iter=%d accepted=0 f=%.12g grad_norm=%.6g radius=%.6g rank=%d",
                    iterations, f, gnorm, radius, shape.rank,
                )
            if radius < _MIN_RADIUS:
                break
    return R, f, gnorm, iterations


def check_rank_deficiency(point, eig_tol: float):
    """Column-rank test of the factor via its singular values.

    Returns (is_deficient, sigma_min / sigma_max, null_direction), the null
    direction being the right-singular vector of the smallest singular value
    when deficient.
    """
    R = np.asarray(point, dtype=float)
    _, svals, vt = np.linalg.svd(R, full_matrices=False)
    smax = float(svals[0]) if svals.size else 0.0
    smin = float(svals[-1]) if svals.size else 0.0
    ratio = smin / smax if smax > 0 else 0.0
    deficient = ratio < eig_tol
    null_dir = vt[-1] if deficient else None
    return deficient, ratio, null_dir


_LANCZOS_STEPS = 150


def _lanczos_min_eig(matvec, v0, num_steps):
    """Smallest Ritz pair of a symmetric operator from num_steps Lanczos
    iterations with full reorthogonalization.  v0 must be a unit vector."""
    dim = v0.shape[0]
    num_steps = min(num_steps, dim)
    basis = np.empty((dim, num_steps))
    alphas = np.empty(num_steps)
    betas = np.empty(max(num_steps - 1, 0))
    q = v0
    basis[:, 0] = q
    steps = 0
    for j in range(num_steps):
        u = matvec(q)
        alpha = float(q @ u)
        alphas[j] = alpha
        steps = j + 1
        if j == num_steps - 1:
            break
        u = u - alpha * q
        if j > 0:
            u = u - betas[j - 1] * basis[:, j - 1]
        # full reorthogonalization against the Krylov basis
        u = u - basis[:, :j + 1] @ (basis[:, :j + 1].T @ u)
        beta = float(np.linalg.norm(u))
        if beta < 1e-12:
            break
        betas[j] = beta
        q = u / beta
        basis[:, j + 1] = q
    T = np.diag(alphas[:steps])
    if steps > 1:
        T += np.diag(betas[:steps - 1], 1) + np.diag(betas[:steps - 1], -1)
    w, s = np.linalg.eigh(T)
    vec = basis[:, :steps] @ s[:, 0]
    return float(w[0]), vec


def _min_hessian_eig(M, shape: ManifoldShape, R, rng):
    """Smallest Riemannian-Hessian eigenvalue at R, probed by Lanczos on
    the projected Hessian operator.  Returns (eigenvalue, unit tangent);
    (value, None) when no usable direction emerges."""
    m, r = R.shape
    if shape.tangent_dim == 0:
        return math.inf, None  # no directions: vacuously second-order critical
    egrad = 2.0 * (M @ R)

    def matvec(w):
        W = project_tangent(shape, R, w.reshape(m, r))
        return _hessian_vec(shape, R, W, M, egrad).ravel()

    v0 = None
    for _ in range(8):
        cand = project_tangent(shape, R, rng.standard_normal((m, r))).ravel()
        nv0 = np.linalg.norm(cand)
        if nv0 > 0.0:
            v0 = cand / nv0
            break
    if v0 is None:
        return None, None
    val, vec = _lanczos_min_eig(matvec, v0, _LANCZOS_STEPS)
    vec = project_tangent(shape, R, vec.reshape(m, r))
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        return val, None
    return val, vec / nrm


# relative size of the escape perturbation before backtracking
_ESCAPE_STEP_FRACTION = 1e-2
# negative-curvature escapes allowed at one rank before giving up
_MAX_ESCAPES_PER_RANK = 20


def _escape_step(M, shape, R, f, direction):
    """Backtracking move along a negative-curvature direction; returns the
    strictly improving point or None."""
    V = (_ESCAPE_STEP_FRACTION * float(np.linalg.norm(R))) * direction
    t = 1.0
    for _ in range(25):
        R_try = retract(shape, R, t * V)
        if trace_quadratic(M, R_try) < f - 1e-12 * (1.0 + abs(f)):
            return R_try
        t *= 0.5
    return None


def staircase_solve(M, base_shape: ManifoldShape, initial_rank: int,
                    params: SolverParams, warm_start=None, seed_or_rng=0,
                    verbose: bool = False) -> StaircaseResult:
    """Rank staircase: optimize, verify second-order criticality by Lanczos,
    certify via rank deficiency, else lift.

    At each rank, TNT runs to a first-order critical point; a Lanczos probe
    of the Riemannian Hessian then either confirms (approximate)
    second-order criticality or supplies a negative-curvature escape
    direction, after which TNT resumes at the same rank (this matters for
    warm starts, which often land exactly on saddles of the updated cost).
    A full-rank second-order critical point is lifted by a zero column and
    escaped along the lifted Hessian's descent direction before
    re-optimizing at rank r + 1; certification reports a rank-deficient
    second-order critical point.
    """
    check_symmetric(M)
    rng = _as_rng(seed_or_rng)
    if base_shape.bottom_block_rows and initial_rank < base_shape.bottom_block_rows:
        raise InvalidInputError("initial rank below bottom block size")
    if initial_rank < 1:
        raise InvalidInputError("initial rank must be >= 1")
    if warm_start is not None:
        R = np.array(warm_start, dtype=float, copy=True)
        if R.shape[0] != base_shape.total_rows:
            raise InvalidInputError("warm start row count mismatch")
        shape = base_shape.with_rank(R.shape[1])
    else:
        shape = base_shape.with_rank(initial_rank)
        R = random_point(shape, rng)

    result = StaircaseResult(R_opt=R, objective=trace_quadratic(M, R))
    for step in range(params.max_staircase_steps):
        iters = 0
        second_order = False
        eig = None
        for _ in range(_MAX_ESCAPES_PER_RANK):
            R, f, gnorm, it = tnt_minimize(M, shape, R, params, verbose=verbose)
            iters += it
            eig, direction = _min_hessian_eig(M, shape, R, rng)
            if eig is None:
                break  # Lanczos failed outright; cannot certify
            if eig >= -params.eig_tol or direction is None:
                second_order = True
                break
            R_next = _escape_step(M, shape, R, f, direction)
            if R_next is None:
                break  # curvature direction gave no usable decrease
            R = R_next
            f = trace_quadratic(M, R)
        deficient, ratio, _ = check_rank_deficiency(R, params.eig_tol)
        result.rank_history.append((shape.rank, iters, gnorm))
        result.R_opt, result.objective = R, f
        result.min_singular_value_ratio = ratio
        result.escape_min_eig = eig
        if verbose:
            logger.info(
                "staircase step=%d rank=%d f=%.12g grad_norm=%.6g sv_ratio=%.3g "
                "deficient=%d second_order=%d", step, shape.rank, f, gnorm,
                ratio, deficient, second_order,
            )
        if not second_order:
            break
        if deficient:
            result.certified = True
            break
        if step == params.max_staircase_steps - 1:
            break
        # lift: zero column keeps R R^T (and the objective) unchanged
        shape = shape.with_rank(shape.rank + 1)
        R_lift = np.hstack([R, np.zeros((R.shape[0], 1))])
        eig, direction = _min_hessian_eig(M, shape, R_lift, rng)
        result.escape_min_eig = eig
        if eig is None:
            break  # Lanczos failed; cannot certify
        if direction is None or eig >= -params.eig_tol:
            # the lifted factor is rank deficient by construction and
            # second-order critical to tolerance, which is the
            # global-optimality condition
            result.certified = True
            break
        R_next = _escape_step(M, shape, R_lift, f, direction)
        if R_next is None:
            break
        R = R_next
    return result
