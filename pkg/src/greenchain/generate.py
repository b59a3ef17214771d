"""Seeded random chains, trees and networks for tests and self-checks."""
from __future__ import annotations

import numpy as np

from .chain import BirthDeathChain
from .network import ConductanceNetwork
from .tree import TreeChain


def random_chain(rng: np.random.Generator, lo=-12, hi=12, max_lazy=0.6, min_step=0.05,
                 absorbing=None) -> BirthDeathChain:
    """Rows with ``a <= max_lazy`` and ``l, r >= min_step``.

    ``r`` is taken as ``1 - a - l`` so every row sums to one up to a single
    rounding.
    """
    if absorbing is None:
        absorbing = (lo, hi)
    size = hi - lo + 1
    a = rng.uniform(0.0, max_lazy, size)
    l = min_step + rng.uniform(0.0, 1.0, size) * (1.0 - a - 2 * min_step)
    r = 1.0 - a - l
    return BirthDeathChain(lo, hi, l, a, r, absorbing)


def random_tree_edges(rng: np.random.Generator, n: int) -> list:
    """Uniform random labelled tree on ``0..n-1`` via a Pruefer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, n - 2)
    degree = np.ones(n, dtype=int)
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = int(np.flatnonzero(degree == 1)[0])
        edges.append((leaf, int(v)))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = np.flatnonzero(degree == 1)
    edges.append((int(u), int(w)))
    return edges


def random_rows(rng, tc_adj, vertices, max_lazy=0.5, min_weight=0.05) -> dict:
    rows = {}
    for v in vertices:
        nbrs = tc_adj[v]
        w = min_weight + rng.uniform(0.0, 1.0, len(nbrs))
        stay = rng.uniform(0.0, max_lazy)
        w = w / w.sum() * (1.0 - stay)
        row = {u: float(p) for u, p in zip(nbrs, w)}
        row[v] = float(1.0 - w.sum())
        rows[v] = row
    return rows


def random_tree_chain(rng: np.random.Generator, n=None, max_vertices=50, min_interior=2) -> TreeChain:
    """Random tree on ``n`` vertices with random interior rows.

    Trees are redrawn until at least ``min_interior`` vertices are interior.
    """
    while True:
        size = int(rng.integers(4, max_vertices + 1)) if n is None else n
        edges = random_tree_edges(rng, size)
        adj = {v: [] for v in range(size)}
        for u, w in edges:
            adj[u].append(w)
            adj[w].append(u)
        interior = [v for v in range(size) if len(adj[v]) > 1]
        if len(interior) >= min_interior:
            break
    for v in adj:
        adj[v].sort()
    return TreeChain(range(size), edges, random_rows(rng, adj, interior))


def random_network(rng: np.random.Generator, n: int, extra_edges=None, loop_fraction=0.3) -> ConductanceNetwork:
    """Connected network: a random spanning tree plus extra random edges."""
    edges = {(min(e), max(e)): float(rng.uniform(0.1, 2.0)) for e in random_tree_edges(rng, n)}
    if extra_edges is None:
        extra_edges = int(rng.integers(0, n + 1))
    for _ in range(extra_edges):
        u, w = (int(x) for x in rng.choice(n, 2, replace=False))
        key = (min(u, w), max(u, w))
        if key not in edges:
            edges[key] = float(rng.uniform(0.1, 2.0))
    loops = {v: float(rng.uniform(0.0, 1.0)) for v in range(n) if rng.uniform() < loop_fraction}
    return ConductanceNetwork(range(n), edges, loops)
