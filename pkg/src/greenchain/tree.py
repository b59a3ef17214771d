"""Birth-death chains on finite trees.

From a vertex the chain moves to a tree neighbour or stays put.  Leaves are
absorbing, so ``G(x, y)`` counts visits to ``y`` before the first leaf.
Such a chain is the walk on the tree for conductances found by a single
breadth-first sweep, and the ratio ``G(j, k) / G(k, j)`` only depends on
the transition probabilities along the path from ``j`` to ``k``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np
import scipy.sparse

from .chain import _DIRECT_BAND, _DIRECT_MAX_FACTORS, ROW_TOL
from .errors import DomainError, PreconditionError, ShapeError, SolverError, SpecParseError, ValidationError
from .exact import GreenMatrix, GreenResult, Route
from .network import ConductanceNetwork, _order_key, solve_voltages

PIVOT_TOL = 1e-13


def _sorted(vs):
    return tuple(sorted(vs, key=_order_key))


def _tree_problems(vertices, adj, n_edges):
    out = []
    if not vertices:
        return ["tree has no vertices"]
    if n_edges != len(vertices) - 1:
        out.append(f"{n_edges} edges for {len(vertices)} vertices; a tree has |V| - 1")
    seen = {vertices[0]}
    queue = deque([vertices[0]])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != len(vertices):
        out.append(f"graph is disconnected: {len(vertices) - len(seen)} vertices unreachable from {vertices[0]}")
    return out


class TreeChain:
    """Birth-death chain on a finite tree with absorbing leaves.

    Parameters
    ----------
    vertices : iterable
        Vertex ids; mutually comparable (ints or strings).
    edges : iterable of pairs
        Tree edges.
    transitions : mapping
        ``{v: {w: p(v, w)}}``; the self-transition is keyed by ``v`` itself.
        Rows of leaves are dropped, since leaves absorb.
    leaves : iterable, optional
        Absorbing vertices.  Defaults to the degree-1 vertices; an explicit
        set must consist of degree-1 vertices and may be empty.

    Raises
    ------
    ValidationError
        If the graph is not a tree or an interior row is not a probability
        distribution over the vertex and its neighbours with every
        neighbour reachable.
    """

    def __init__(self, vertices, edges, transitions: Mapping, leaves=None):
        self.vertices = _sorted(set(vertices))
        vset = set(self.vertices)
        problems = []
        adj = {v: set() for v in self.vertices}
        n_edges = 0
        for u, v in edges:
            if u not in vset or v not in vset:
                problems.append(f"edge ({u}, {v}) touches an unknown vertex")
                continue
            if u == v or v in adj[u]:
                problems.append(f"edge ({u}, {v}) is a loop or a duplicate")
                continue
            adj[u].add(v)
            adj[v].add(u)
            n_edges += 1
        if problems:
            raise ValidationError(problems)
        problems.extend(_tree_problems(self.vertices, adj, n_edges))
        self.adj = {v: _sorted(nb) for v, nb in adj.items()}

        if leaves is None:
            leaves = [v for v in self.vertices if len(adj[v]) == 1]
        else:
            leaves = list(leaves)
            for v in leaves:
                if v not in vset:
                    problems.append(f"leaf {v} is not a vertex")
                elif len(adj[v]) != 1:
                    problems.append(f"leaf {v} has degree {len(adj[v])}, expected 1")
        self.leaves = frozenset(leaves)
        self.interior = tuple(v for v in self.vertices if v not in self.leaves)

        self._rows = {}
        for v in self.interior:
            row = transitions.get(v)
            if row is None:
                problems.append(f"missing transition row for interior vertex {v}")
                continue
            clean = {}
            for w, p in row.items():
                p = float(p)
                if w != v and w not in adj[v]:
                    problems.append(f"p({v}, {w}) = {p} but {w} is not a neighbour of {v}")
                elif not (p >= 0 and math.isfinite(p)):
                    problems.append(f"p({v}, {w}) = {p} is not a probability")
                else:
                    clean[w] = p
            for w in adj[v]:
                if clean.get(w, 0.0) <= 0:
                    problems.append(f"p({v}, {w}) must be > 0 on tree edge ({v}, {w})")
            total = math.fsum(clean.values())
            if abs(total - 1.0) > ROW_TOL:
                problems.append(f"row sum {total:.15g} != 1 at vertex {v}")
            self._rows[v] = clean
        if problems:
            raise ValidationError(problems)

    def __repr__(self):
        return (f"TreeChain({len(self.vertices)} vertices, {len(self.interior)} interior, "
                f"{len(self.leaves)} leaves)")

    @property
    def edges(self) -> list:
        return [(v, w) for v in self.vertices for w in self.adj[v] if _order_key(v) < _order_key(w)]

    def has_row(self, v) -> bool:
        return v in self._rows

    def row(self, v) -> dict:
        if v not in self._rows:
            raise DomainError(f"vertex {v} is a leaf and has no transition row")
        return dict(self._rows[v])

    def p(self, v, w) -> float:
        """Transition probability ``p(v, w)``; 0 for leaves and non-neighbours."""
        return self._rows.get(v, {}).get(w, 0.0)

    def normalized(self) -> "TreeChain":
        rows = {}
        for v, row in self._rows.items():
            total = math.fsum(row.values())
            rows[v] = {w: p / total for w, p in row.items()}
        return TreeChain(self.vertices, self.edges, rows, self.leaves)

    @classmethod
    def from_host(cls, host: "TreeChain", subset, leaves=None) -> "TreeChain":
        """Restrict ``host`` to the subtree spanned by ``subset``.

        Transitions out of the new leaves and into vertices outside
        ``subset`` are deleted.  Nothing is renormalised: every interior row
        of the subtree must already put all its mass inside ``subset``.
        """
        sub = set(subset)
        unknown = sub - set(host.vertices)
        if unknown:
            raise ValidationError([f"subset vertex {v} not in host tree" for v in _sorted(unknown)])
        edges = [(v, w) for v, w in host.edges if v in sub and w in sub]
        deg = {v: 0 for v in sub}
        for v, w in edges:
            deg[v] += 1
            deg[w] += 1
        if leaves is None:
            leaves = [v for v in sub if deg[v] == 1]
        leaves = set(leaves)
        rows = {}
        problems = []
        for v in _sorted(sub - leaves):
            if not host.has_row(v):
                problems.append(f"vertex {v} is absorbing in the host tree")
                continue
            row = host.row(v)
            lost = math.fsum(p for w, p in row.items() if w not in sub)
            if lost > ROW_TOL:
                problems.append(f"row of {v} sends mass {lost:.6g} outside the subtree")
            rows[v] = {w: p for w, p in row.items() if w in sub}
        if problems:
            raise ValidationError(problems)
        return cls(sub, edges, rows, leaves)


@dataclass(frozen=True)
class TreePath:
    """The unique path ``j, v_1, ..., v_m, k`` in a tree."""

    j: Hashable
    k: Hashable
    intermediate: tuple

    @property
    def vertices(self) -> tuple:
        return (self.j, *self.intermediate, self.k)

    @property
    def length(self) -> int:
        """Number of edges on the path."""
        return len(self.intermediate) + 1


def tree_path(tc: TreeChain, j, k) -> TreePath:
    if j not in tc.adj or k not in tc.adj:
        raise DomainError(f"unknown vertex in pair ({j}, {k})")
    if j == k:
        raise DomainError(f"degenerate pair: j = k = {j}")
    parent = {j: None}
    queue = deque([j])
    while queue and k not in parent:
        v = queue.popleft()
        for w in tc.adj[v]:
            if w not in parent:
                parent[w] = v
                queue.append(w)
    walk = [k]
    while walk[-1] != j:
        walk.append(parent[walk[-1]])
    walk.reverse()
    return TreePath(j, k, tuple(walk[1:-1]))


def _path_factors(tc: TreeChain, j, k):
    for v in (j, k):
        if v in tc.leaves:
            raise DomainError(f"vertex {v} is a leaf")
    verts = tree_path(tc, j, k).vertices
    fwd = [tc.p(a, b) for a, b in zip(verts, verts[1:])]
    back = [tc.p(b, a) for a, b in zip(verts, verts[1:])]
    return fwd, back


def log_path_ratio(tc: TreeChain, j, k) -> float:
    fwd, back = _path_factors(tc, j, k)
    return math.fsum(map(math.log, fwd)) - math.fsum(map(math.log, back))


def path_ratio(tc: TreeChain, j, k) -> float:
    """``G(j, k) / G(k, j)`` as the product of transition probabilities
    along the path from ``j`` to ``k`` over those along the way back.

    Short paths with factors in ``[1e-3, 1]`` are multiplied directly, as
    for line chains; longer ones go through log space.
    """
    fwd, back = _path_factors(tc, j, k)
    if len(fwd) <= _DIRECT_MAX_FACTORS and min(fwd + back) >= _DIRECT_BAND[0]:
        return math.prod(fwd) / math.prod(back)
    return math.exp(math.fsum(map(math.log, fwd)) - math.fsum(map(math.log, back)))


def _bfs(tc: TreeChain, root):
    order = [root]
    parent = {root: None}
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        for w in tc.adj[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    return order, parent


def assign_conductances(tc: TreeChain, root=None, seed: float = 1.0) -> ConductanceNetwork:
    """Conductances on the tree whose walk reproduces ``tc``.

    The first edge at ``root`` (towards its smallest neighbour) gets
    ``seed``.  Vertices are then visited breadth-first, children in
    ascending id order.  On arrival at ``v`` exactly one conductance
    ``C_vu`` at ``v`` is known and the rest follow from
    ``C_vw = C_vu p(v, w) / p(v, u)``, loop included.  Leaves carry no
    row and get no loop.
    """
    if root is None:
        root = tc.interior[0] if tc.interior else tc.vertices[0]
    if root not in tc.adj:
        raise DomainError(f"root {root} is not a vertex")
    if not seed > 0:
        raise DomainError(f"seed conductance must be positive, got {seed}")
    if not tc.adj[root]:
        raise ShapeError("a single-vertex tree has no edges to weight")
    order, parent = _bfs(tc, root)
    cond = {}
    loops = {}
    for v in order:
        if parent[v] is None:
            u = tc.adj[v][0]
            known = float(seed)
            cond[frozenset((v, u))] = known
        else:
            u = parent[v]
            known = cond[frozenset((v, u))]
        if not tc.has_row(v):
            continue
        pu = tc.p(v, u)
        if pu <= 0:
            raise ValidationError([f"p({v}, {u}) = 0 on a tree edge"])
        for w in tc.adj[v]:
            if w != u:
                cond[frozenset((v, w))] = known * tc.p(v, w) / pu
        loops[v] = known * tc.p(v, v) / pu
    edges = {tuple(_sorted(e)): c for e, c in cond.items()}
    return ConductanceNetwork(tc.vertices, edges, loops)


def recover_probabilities(net: ConductanceNetwork, leaves=None) -> TreeChain:
    """Transition probabilities ``C_vw / C(v)`` of the walk on a tree network.

    ``leaves`` defaults to the degree-1 vertices; their rows are dropped.
    """
    if not net.is_tree():
        raise ShapeError("network is not a tree")
    rows = {}
    for v in net.vertices:
        total = net.total(v)
        row = {w: c / total for w, c in net.neighbors(v).items()}
        if net.loop(v) > 0:
            row[v] = net.loop(v) / total
        rows[v] = row
    return TreeChain(net.vertices, list(net.edges), rows, leaves)


class TreeFactorization:
    """Elimination of ``I - Q`` over the interior vertices, leaves first.

    Interior vertices form a forest, so eliminating each vertex into its
    parent creates no fill-in; this is Thomas elimination run on a tree.
    """

    def __init__(self, tc: TreeChain):
        self.tc = tc
        self.states = tc.interior
        if not self.states:
            raise DomainError("tree has no interior vertices")
        index = {v: i for i, v in enumerate(self.states)}
        self.index = index
        inner = set(self.states)
        order, parent = [], []
        seen = set()
        for start in self.states:
            if start in seen:
                continue
            seen.add(start)
            queue = deque([start])
            par = {start: None}
            while queue:
                v = queue.popleft()
                order.append(index[v])
                parent.append(None if par[v] is None else index[par[v]])
                for w in tc.adj[v]:
                    if w in inner and w not in seen:
                        seen.add(w)
                        par[w] = v
                        queue.append(w)
        self.order = order
        self.parent = dict(zip(order, parent))
        n = len(self.states)
        self.diag = np.array([1.0 - tc.p(v, v) for v in self.states])
        # up[i] = M[parent(i), i], down[i] = M[i, parent(i)]
        self.up = np.zeros(n)
        self.down = np.zeros(n)
        for i, pi in self.parent.items():
            if pi is not None:
                v, pv = self.states[i], self.states[pi]
                self.up[i] = -tc.p(pv, v)
                self.down[i] = -tc.p(v, pv)
        piv = self.diag.copy()
        for i in reversed(order):
            if abs(piv[i]) <= PIVOT_TOL:
                raise SolverError(f"singular system: pivot at vertex {self.states[i]} is {piv[i]:.3e} "
                                  "(no leaf reachable?)")
            pi = self.parent[i]
            if pi is not None:
                piv[pi] -= self.up[i] * self.down[i] / piv[i]
        self.pivots = piv

    def matrix(self):
        n = len(self.states)
        rows = list(range(n))
        cols = list(range(n))
        vals = list(self.diag)
        for i, pi in self.parent.items():
            if pi is not None:
                rows += [pi, i]
                cols += [i, pi]
                vals += [self.up[i], self.down[i]]
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def solve(self, rhs):
        b = np.array(rhs, dtype=float)
        for i in reversed(self.order):
            pi = self.parent[i]
            if pi is not None:
                b[pi] -= self.up[i] * b[i] / self.pivots[i]
        x = b
        for i in self.order:
            pi = self.parent[i]
            if pi is None:
                x[i] = b[i] / self.pivots[i]
            else:
                x[i] = (b[i] - self.down[i] * x[pi]) / self.pivots[i]
        return x


def _check_interior(tc, *vs):
    for v in vs:
        if v not in tc.adj:
            raise DomainError(f"unknown vertex {v}")
        if v in tc.leaves:
            raise DomainError(f"vertex {v} is a leaf")


def green_tree(tc: TreeChain, x, y) -> GreenResult:
    """Expected visits to ``y`` before hitting a leaf, starting from ``x``."""
    _check_interior(tc, x, y)
    fact = TreeFactorization(tc)
    e = np.zeros(len(fact.states))
    e[fact.index[y]] = 1.0
    col = fact.solve(e)
    residual = float(np.max(np.abs(fact.matrix() @ col - e)))
    value = float(col[fact.index[x]])
    if not value >= 0:
        raise SolverError(f"negative Green's function {value} at ({x}, {y})")
    return GreenResult(value, Route.EXACT, residual=residual)


def green_tree_matrix(tc: TreeChain) -> GreenMatrix:
    fact = TreeFactorization(tc)
    eye = np.eye(len(fact.states))
    values = fact.solve(eye)
    residual = float(np.max(np.abs(fact.matrix() @ values - eye)))
    values.setflags(write=False)
    return GreenMatrix(fact.states, values, residual)


def green_tree_via_voltage(tc: TreeChain, x, y, net: ConductanceNetwork | None = None) -> GreenResult:
    """``C(y) V(y)`` with a unit source at ``x`` and every leaf grounded."""
    _check_interior(tc, x, y)
    if not tc.leaves:
        raise PreconditionError("tree has no leaves to ground")
    if net is None:
        net = assign_conductances(tc)
    sol = solve_voltages(net, x, tc.leaves)
    return GreenResult(net.total(y) * sol[y], Route.VOLTAGE, residual=sol.kcl_residual)


# --- JSON spec ------------------------------------------------------------

def tree_from_dict(data: Mapping, normalize: bool = False) -> TreeChain:
    """Build a tree chain from the tree spec mapping.

    ``{"vertices": [...], "edges": [[u, v], ...], "transitions": [{"v": id,
    "self": p, "to": {neighbour: p}}], "leaves": [...]}``; ``leaves`` is
    optional.  Neighbour keys of ``to`` are matched to vertex ids by their
    string form, since JSON object keys are strings.
    """
    try:
        vertices = list(data["vertices"])
        by_name = {str(v): v for v in vertices}
        edges = [tuple(e) for e in data["edges"]]
        if any(len(e) != 2 for e in edges):
            raise SpecParseError("edges must be pairs")
        rows = {}
        for rec in data.get("transitions", []):
            v = rec["v"]
            if v in rows:
                raise SpecParseError(f"duplicate transition row for vertex {v}")
            row = {}
            for name, p in rec.get("to", {}).items():
                if str(name) not in by_name:
                    raise SpecParseError(f"transition from {v} to unknown vertex {name!r}")
                row[by_name[str(name)]] = float(p)
            if rec.get("self", 0):
                row[v] = float(rec["self"])
            rows[v] = row
        leaves = data.get("leaves")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecParseError):
            raise
        raise SpecParseError(f"malformed tree spec: {exc!r}") from None
    if normalize:
        rows = {v: {w: p / math.fsum(row.values()) for w, p in row.items()} for v, row in rows.items()}
    return TreeChain(vertices, edges, rows, leaves)


def tree_to_dict(tc: TreeChain) -> dict:
    return {
        "kind": "tree",
        "vertices": list(tc.vertices),
        "edges": [list(e) for e in tc.edges],
        "transitions": [
            {"v": v, "self": tc.p(v, v), "to": {str(w): tc.p(v, w) for w in tc.adj[v]}}
            for v in tc.interior
        ],
        "leaves": list(_sorted(tc.leaves)),
    }
