"""Potts-model MRF instances: data model, discrete energy, synthetic grids.

An instance holds N nodes, K labels, unary terms (node, measured label,
weight) and binary Potts terms (edge, weight).  The energy of a labeling x is

    E(x) = sum_u  w_u * [x[node_u] != label_u]
         + sum_e  w_e * [x[i_e] != x[j_e]]

Weights may have any sign; nothing here assumes attractive potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class UnaryTerm:
    node: int
    label: int
    weight: float


@dataclass(frozen=True)
class BinaryTerm:
    i: int
    j: int
    weight: float


@dataclass(frozen=True)
class MrfInstance:
    """Immutable MRF instance.  Edges are stored once with i < j."""

    num_nodes: int
    num_labels: int
    unary: tuple = ()
    binary: tuple = ()

    def __post_init__(self):
        if not isinstance(self.num_nodes, (int, np.integer)) or self.num_nodes < 1:
            raise InvalidInputError("num_nodes must be a positive integer")
        if not isinstance(self.num_labels, (int, np.integer)) or self.num_labels < 2:
            raise InvalidInputError("num_labels must be an integer >= 2")
        object.__setattr__(self, "unary", tuple(self.unary))
        object.__setattr__(self, "binary", tuple(self.binary))
        seen_unary = set()
        for t in self.unary:
            if not (0 <= t.node < self.num_nodes):
                raise InvalidInputError(f"unary node {t.node} out of range")
            if not (0 <= t.label < self.num_labels):
                raise InvalidInputError(f"unary label {t.label} out of range")
            if not math.isfinite(t.weight):
                raise InvalidInputError("unary weight must be finite")
            key = (t.node, t.label)
            if key in seen_unary:
                raise InvalidInputError(f"duplicate unary term for {key}")
            seen_unary.add(key)
        seen_edges = set()
        for t in self.binary:
            if not (0 <= t.i < self.num_nodes and 0 <= t.j < self.num_nodes):
                raise InvalidInputError(f"edge ({t.i},{t.j}) out of range")
            if t.i >= t.j:
                raise InvalidInputError(
                    f"edge ({t.i},{t.j}) violates canonical order i < j"
                )
            if not math.isfinite(t.weight):
                raise InvalidInputError("binary weight must be finite")
            if (t.i, t.j) in seen_edges:
                raise InvalidInputError(f"duplicate edge ({t.i},{t.j})")
            seen_edges.add((t.i, t.j))


def validate_labeling(mrf: MrfInstance, labeling) -> np.ndarray:
    """Coerce to an int array and check length and label range."""
    x = np.asarray(labeling)
    if x.ndim != 1 or x.shape[0] != mrf.num_nodes:
        raise InvalidInputError(
            f"labeling has length {x.shape}, expected ({mrf.num_nodes},)"
        )
    if not np.issubdtype(x.dtype, np.integer):
        xr = np.rint(np.asarray(labeling, dtype=float)).astype(int)
        if not np.array_equal(xr, np.asarray(labeling, dtype=float)):
            raise InvalidInputError("labeling entries must be integers")
        x = xr
    if x.size and (x.min() < 0 or x.max() >= mrf.num_labels):
        raise InvalidInputError("labeling entry out of [0, K)")
    return x.astype(int)


def energy(mrf: MrfInstance, labeling) -> float:
    """Discrete energy of a labeling (sum of violated unary/binary terms)."""
    x = validate_labeling(mrf, labeling)
    total = 0.0
    for t in mrf.unary:
        if x[t.node] != t.label:
            total += t.weight
    for t in mrf.binary:
        if x[t.i] != x[t.j]:
            total += t.weight
    return total


def unary_arrays(mrf: MrfInstance):
    """(nodes, labels, weights) arrays for vectorized evaluation."""
    n = np.array([t.node for t in mrf.unary], dtype=int)
    l = np.array([t.label for t in mrf.unary], dtype=int)
    w = np.array([t.weight for t in mrf.unary], dtype=float)
    return n, l, w


def binary_arrays(mrf: MrfInstance):
    i = np.array([t.i for t in mrf.binary], dtype=int)
    j = np.array([t.j for t in mrf.binary], dtype=int)
    w = np.array([t.weight for t in mrf.binary], dtype=float)
    return i, j, w


def energy_batch(mrf: MrfInstance, labelings: np.ndarray) -> np.ndarray:
    """Energies of a (m, N) batch of labelings, vectorized over rows."""
    labelings = np.asarray(labelings)
    un, ul, uw = unary_arrays(mrf)
    bi, bj, bw = binary_arrays(mrf)
    out = np.zeros(labelings.shape[0])
    if un.size:
        out += (labelings[:, un] != ul[None, :]) @ uw
    if bi.size:
        out += (labelings[:, bi] != labelings[:, bj]) @ bw
    return out


def unary_argmax_labeling(mrf: MrfInstance) -> np.ndarray:
    """Measured label of the largest-weight unary term per node (0 if none)."""
    best = np.full(mrf.num_nodes, -np.inf)
    labels = np.zeros(mrf.num_nodes, dtype=int)
    for t in mrf.unary:
        if t.weight > best[t.node]:
            best[t.node] = t.weight
            labels[t.node] = t.label
    return labels


def binary_weight_from_features(c_i, c_j, lam1: float, lam2: float, beta: float) -> float:
    """Gaussian-kernel edge weight lam1 + lam2 * exp(-beta * ||c_i - c_j||^2)."""
    a = np.asarray(c_i, dtype=float)
    b = np.asarray(c_j, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError("feature vectors must have equal length")
    if not (math.isfinite(beta) and beta >= 0):
        raise InvalidInputError("beta must be finite and >= 0")
    d2 = float(np.sum((a - b) ** 2))
    return lam1 + lam2 * math.exp(-beta * d2)


# --- synthetic grid generation ------------------------------------------

@dataclass(frozen=True)
class ConstantWeights:
    value: float = 0.1


@dataclass(frozen=True)
class UniformWeights:
    low: float = 0.05
    high: float = 0.2


@dataclass(frozen=True)
class KernelWeights:
    """Edge weights from synthetic node features via the Gaussian kernel.

    Features are noisy one-hot embeddings of the ground-truth labels; with
    beta=None the bandwidth is set to 1 / (2 * mean squared edge distance).
    """

    lam1: float = 0.02
    lam2: float = 0.04
    beta: float | None = None
    feature_noise: float = 0.3


def grid_edges(rows: int, cols: int):
    """4-connected grid edges (i < j), node index = r * cols + c."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return edges


def _patch_labeling(rows, cols, num_labels, rng):
    """Smooth ground truth by multi-source region growing from random seeds."""
    n = rows * cols
    labels = np.full(n, -1, dtype=int)
    num_seeds = max(1, n // 8)
    seeds = rng.choice(n, size=num_seeds, replace=False)
    labels[seeds] = rng.integers(0, num_labels, size=num_seeds)
    neighbors = [[] for _ in range(n)]
    for i, j in grid_edges(rows, cols):
        neighbors[i].append(j)
        neighbors[j].append(i)
    frontier = list(seeds)
    while frontier:
        k = int(rng.integers(len(frontier)))
        node = frontier.pop(k)
        for nb in neighbors[node]:
            if labels[nb] < 0:
                labels[nb] = labels[node]
                frontier.append(nb)
    return labels


def generate_grid_instance(
    rows: int,
    cols: int,
    num_labels: int,
    unary_noise: float = 0.2,
    unary_weight_range=(0.2, 1.0),
    binary_weight_model=None,
    seed: int = 0,
    return_truth: bool = False,
):
    """Random 4-connected grid instance, deterministic for a fixed seed.

    A smooth ground-truth labeling is sampled; each node gets one unary term
    whose measured label equals the truth with probability 1 - unary_noise
    (uniform wrong label otherwise).  Edge weights follow the given model.
    """
    if rows < 1 or cols < 1:
        raise InvalidInputError("rows and cols must be >= 1")
    if num_labels < 2:
        raise InvalidInputError("num_labels must be >= 2")
    if not (0.0 <= unary_noise <= 1.0):
        raise InvalidInputError("unary_noise must be a probability in [0, 1]")
    lo, hi = float(unary_weight_range[0]), float(unary_weight_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise InvalidInputError("unary_weight_range must be a finite (lo, hi) with lo <= hi")
    if binary_weight_model is None:
        binary_weight_model = KernelWeights()

    rng = np.random.default_rng(seed)
    n = rows * cols
    k = num_labels
    truth = _patch_labeling(rows, cols, k, rng)
    edges = grid_edges(rows, cols)

    measured = truth.copy()
    flip = rng.random(n) < unary_noise
    # uniform over the K-1 wrong labels
    offsets = rng.integers(1, k, size=n)
    measured[flip] = (truth[flip] + offsets[flip]) % k
    weights = rng.uniform(lo, hi, size=n)
    unary = tuple(
        UnaryTerm(int(i), int(measured[i]), float(weights[i])) for i in range(n)
    )

    model = binary_weight_model
    if isinstance(model, ConstantWeights):
        if not math.isfinite(model.value):
            raise InvalidInputError("constant edge weight must be finite")
        ew = np.full(len(edges), float(model.value))
    elif isinstance(model, UniformWeights):
        if model.low > model.high:
            raise InvalidInputError("uniform edge range must have low <= high")
        ew = rng.uniform(model.low, model.high, size=len(edges))
    elif isinstance(model, KernelWeights):
        feats = np.eye(k)[truth] + model.feature_noise * rng.standard_normal((n, k))
        if edges:
            d2 = np.array([np.sum((feats[i] - feats[j]) ** 2) for i, j in edges])
            beta = model.beta
            if beta is None:
                mean_d2 = float(d2.mean())
                beta = 0.0 if mean_d2 == 0.0 else 1.0 / (2.0 * mean_d2)
            ew = model.lam1 + model.lam2 * np.exp(-beta * d2)
        else:
            ew = np.zeros(0)
    else:
        raise InvalidInputError(f"unknown binary weight model {model!r}")

    binary = tuple(
        BinaryTerm(int(i), int(j), float(w)) for (i, j), w in zip(edges, ew)
    )
    inst = MrfInstance(num_nodes=n, num_labels=k, unary=unary, binary=binary)
    if return_truth:
        return inst, truth
    return inst
