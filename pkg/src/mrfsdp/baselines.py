"""Exact brute-force MAP oracle and a greedy local-search baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeRefusalError
from .mrf import MrfInstance, energy, validate_labeling

DEFAULT_BUDGET = 20_000_000
_MAX_BLOCK_STATES = 1 << 17


@dataclass
class ExactResult:
    labeling: np.ndarray
    f_opt: float
    states_enumerated: int


def _decode_states(start: int, stop: int, num_nodes: int, num_labels: int):
    """Rows are labelings for state indices [start, stop), most significant
    digit = node 0, so enumeration order is lexicographic."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, num_nodes), dtype=np.int64)
    for col in range(num_nodes - 1, -1, -1):
        out[:, col] = idx % num_labels
        idx //= num_labels
    return out


def brute_force(mrf: MrfInstance, budget: int = DEFAULT_BUDGET) -> ExactResult:
    """Exhaustive minimization over all K^N labelings.

    Refuses (never silently approximates) when K^N exceeds the budget.
    Nodes split into a high prefix and a low block of at most
    _MAX_BLOCK_STATES states; energies of low-only terms are evaluated once
    and reused across every prefix assignment, with only prefix-crossing
    edges re-evaluated per block.  States are scanned in lexicographic
    order with strict improvement, so ties resolve to the lexicographically
    smallest labeling.
    """
    n, k = mrf.num_nodes, mrf.num_labels
    total = k ** n
    if total > budget:
        raise SizeRefusalError(
            f"state space {total} exceeds budget {budget}"
        )
    low_n = 0
    while low_n < n and k ** (low_n + 1) <= _MAX_BLOCK_STATES:
        low_n += 1
    high_n = n - low_n
    low_states = _decode_states(0, k ** low_n, low_n, k)

    low_energy = np.zeros(k ** low_n)
    high_unary, cross_edges, high_edges = [], [], []
    for t in mrf.unary:
        if t.node >= high_n:
            low_energy += t.weight * (low_states[:, t.node - high_n] != t.label)
        else:
            high_unary.append(t)
    for t in mrf.binary:
        if t.i >= high_n and t.j >= high_n:
            low_energy += t.weight * (
                low_states[:, t.i - high_n] != low_states[:, t.j - high_n]
            )
        elif t.i < high_n and t.j < high_n:
            high_edges.append(t)
        else:
            cross_edges.append(t)  # canonical order puts t.i in the prefix

    best_f = np.inf
    best_x = None
    for h_idx in range(k ** high_n):
        h = _decode_states(h_idx, h_idx + 1, high_n, k)[0] if high_n else \
            np.zeros(0, dtype=np.int64)
        vals = low_energy.copy()
        const = 0.0
        for t in high_unary:
            const += t.weight * (h[t.node] != t.label)
        for t in high_edges:
            const += t.weight * (h[t.i] != h[t.j])
        for t in cross_edges:
            vals += t.weight * (low_states[:, t.j - high_n] != h[t.i])
        pos = int(np.argmin(vals))
        cand = vals[pos] + const
        if cand < best_f:
            best_f = float(cand)
            best_x = np.concatenate([h, low_states[pos]])
    return ExactResult(labeling=best_x, f_opt=best_f, states_enumerated=total)


def _local_tables(mrf: MrfInstance):
    """Per-node unary cost rows and adjacency lists for coordinate descent."""
    n, k = mrf.num_nodes, mrf.num_labels
    unary_cost = np.zeros((n, k))
    for t in mrf.unary:
        unary_cost[t.node] += t.weight
        unary_cost[t.node, t.label] -= t.weight
    adjacency = [[] for _ in range(n)]
    for t in mrf.binary:
        adjacency[t.i].append((t.j, t.weight))
        adjacency[t.j].append((t.i, t.weight))
    return unary_cost, adjacency


def icm(mrf: MrfInstance, init, max_sweeps: int = 100):
    """Iterated conditional modes: sweep nodes in index order, moving each
    to its locally optimal label; stops at a no-change sweep.  Returns
    (labeling, energy); ties keep the current label, so a local optimum is
    returned unchanged."""
    x = validate_labeling(mrf, init).copy()
    unary_cost, adjacency = _local_tables(mrf)
    for _ in range(max_sweeps):
        changed = False
        for i in range(mrf.num_nodes):
            costs = unary_cost[i].copy()
            for j, w in adjacency[i]:
                costs += w
                costs[x[j]] -= w
            best = int(np.argmin(costs))
            if costs[best] < costs[x[i]]:
                x[i] = best
                changed = True
        if not changed:
            break
    return x, energy(mrf, x)
