"""Electric networks and the voltage route to Green's functions.

A network carries a conductance on each undirected edge and optionally a
loop conductance at a vertex.  The walk on it moves from ``v`` to ``w``
with probability ``C_vw / C(v)``, where ``C(v)`` sums every conductance at
``v`` including the loop.

Expected visits are voltages in disguise: inject a unit current at the start
``x``, hold the absorbing vertices at 0 volts, and the expected number of
visits to ``y`` before absorption is ``C(y) * V(y)``.  Loops change ``C(v)``
but never carry current, so they stay out of the Kirchhoff system.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .chain import BirthDeathChain, check_interior, ensure_valid
from .errors import ConnectivityError, DomainError, SolverError, ValidationError
from .exact import GreenResult, Route

DENSE_LIMIT = 2048


def _edge_key(v, w):
    return (v, w) if _order_key(v) <= _order_key(w) else (w, v)


def _order_key(v):
    # mixed int/str ids still need a total order
    return (isinstance(v, str), v)


class ConductanceNetwork:
    """Undirected weighted graph with loop weights.

    Parameters
    ----------
    vertices : iterable
        Hashable, mutually comparable vertex ids.
    edges : mapping
        ``{(v, w): C_vw}`` with ``v != w`` and ``C_vw > 0``.  Either
        orientation may be given, not both.
    loops : mapping, optional
        ``{v: C_vv}`` with ``C_vv >= 0``.
    """

    def __init__(self, vertices, edges: Mapping, loops: Mapping | None = None):
        self.vertices = tuple(sorted(set(vertices), key=_order_key))
        vset = set(self.vertices)
        problems = []
        self._edges = {}
        self._adj = {v: {} for v in self.vertices}
        for (v, w), c in edges.items():
            c = float(c)
            if v == w:
                problems.append(f"edge ({v}, {w}) is a loop; pass it in loops")
                continue
            if v not in vset or w not in vset:
                problems.append(f"edge ({v}, {w}) touches an unknown vertex")
                continue
            if not (c > 0 and math.isfinite(c)):
                problems.append(f"edge ({v}, {w}) has conductance {c}, must be positive")
                continue
            key = _edge_key(v, w)
            if key in self._edges:
                problems.append(f"edge ({v}, {w}) given twice")
                continue
            self._edges[key] = c
            self._adj[v][w] = c
            self._adj[w][v] = c
        self._loops = {}
        for v, c in (loops or {}).items():
            c = float(c)
            if v not in vset:
                problems.append(f"loop at unknown vertex {v}")
            elif not (c >= 0 and math.isfinite(c)):
                problems.append(f"loop at {v} has conductance {c}, must be >= 0")
            elif c > 0:
                self._loops[v] = c
        for v in self.vertices:
            if self.total(v) <= 0:
                problems.append(f"vertex {v} has zero total conductance")
        if problems:
            raise ValidationError(problems)

    def __repr__(self):
        return (f"ConductanceNetwork({len(self.vertices)} vertices, "
                f"{len(self._edges)} edges, {len(self._loops)} loops)")

    @property
    def edges(self) -> dict:
        return dict(self._edges)

    @property
    def loops(self) -> dict:
        return dict(self._loops)

    def neighbors(self, v) -> dict:
        return dict(self._adj[v])

    def conductance(self, v, w) -> float:
        if v == w:
            return self._loops.get(v, 0.0)
        return self._adj[v].get(w, 0.0)

    def loop(self, v) -> float:
        return self._loops.get(v, 0.0)

    def total(self, v) -> float:
        """``C(v)``: edge conductances at ``v`` plus its loop."""
        return math.fsum(self._adj[v].values()) + self._loops.get(v, 0.0)

    def transition(self, v, w) -> float:
        return self.conductance(v, w) / self.total(v)

    def is_tree(self) -> bool:
        return len(self._edges) == len(self.vertices) - 1 and len(self.component(self.vertices[0])) == len(self.vertices)

    def is_path(self) -> bool:
        return self.is_tree() and all(len(nb) <= 2 for nb in self._adj.values())

    def component(self, start) -> set:
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def scaled(self, factor: float) -> "ConductanceNetwork":
        return ConductanceNetwork(self.vertices,
                                  {e: c * factor for e, c in self._edges.items()},
                                  {v: c * factor for v, c in self._loops.items()})

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"u": u, "v": v, "C": c} for (u, v), c in sorted(
                self._edges.items(), key=lambda kv: (_order_key(kv[0][0]), _order_key(kv[0][1])))],
            "loops": [{"v": v, "C": self._loops[v]} for v in self.vertices if v in self._loops],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConductanceNetwork":
        edges = {(e["u"], e["v"]): e["C"] for e in data["edges"]}
        loops = {rec["v"]: rec["C"] for rec in data.get("loops", [])}
        return cls(data["vertices"], edges, loops)

    @classmethod
    def from_json(cls, text: str) -> "ConductanceNetwork":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class VoltageSolution:
    """Voltages for a unit current injected at ``source`` with ``grounded``
    vertices held at zero."""

    source: Hashable
    grounded: frozenset
    voltages: dict
    injected_current: float = 1.0
    kcl_residual: float = 0.0

    def __getitem__(self, v) -> float:
        return self.voltages[v]


def grounded_laplacian(net: ConductanceNetwork, grounded, vertices=None):
    """Weighted Laplacian restricted to the non-grounded vertices.

    Returns ``(order, matrix)``.  Loops do not enter; edges into ground add
    to the diagonal only.  ``vertices`` limits the rows to a subset.
    """
    grounded = set(grounded)
    if vertices is None:
        vertices = net.vertices
    order = [v for v in sorted(vertices, key=_order_key) if v not in grounded]
    index = {v: i for i, v in enumerate(order)}
    rows, cols, vals = [], [], []
    for v in order:
        i = index[v]
        diag = 0.0
        for w, c in net._adj[v].items():
            diag += c
            if w in index:
                rows.append(i)
                cols.append(index[w])
                vals.append(-c)
        rows.append(i)
        cols.append(i)
        vals.append(diag)
    mat = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(len(order), len(order)))
    return order, mat


def _solve_spd(mat, rhs):
    n = mat.shape[0]
    if n > 1 and _is_tridiagonal(mat):
        # symmetric banded storage: superdiagonal in row 0, diagonal in row 1
        ab = np.zeros((2, n))
        ab[0, 1:] = mat.diagonal(1)
        ab[1, :] = mat.diagonal()
        return scipy.linalg.solveh_banded(ab, rhs)
    if n <= DENSE_LIMIT:
        cho = scipy.linalg.cho_factor(mat.toarray())
        return scipy.linalg.cho_solve(cho, rhs)
    return scipy.sparse.linalg.spsolve(mat.tocsc(), rhs)


def solve_voltages(net: ConductanceNetwork, source, grounded) -> VoltageSolution:
    """Unit current in at ``source``, out through the ``grounded`` vertices.

    Only the connected component of ``source`` carries current; vertices
    elsewhere sit at 0 volts.
    """
    grounded = frozenset(grounded)
    if not grounded:
        raise ConnectivityError("at least one vertex must be grounded")
    unknown = [v for v in grounded | {source} if v not in net._adj]
    if unknown:
        raise DomainError(f"unknown vertices {unknown}")
    if source in grounded:
        raise DomainError(f"source {source} is grounded")
    comp = net.component(source)
    if not comp & grounded:
        raise ConnectivityError(f"source {source} is not connected to any grounded vertex")
    order, mat = grounded_laplacian(net, grounded, comp)
    rhs = np.zeros(len(order))
    rhs[order.index(source)] = 1.0
    try:
        volts = _solve_spd(mat, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SolverError(f"grounded Laplacian is singular: {exc}") from None
    residual = mat @ volts - rhs
    kcl = float(np.max(np.abs(residual))) if residual.size else 0.0
    voltages = {v: 0.0 for v in net.vertices}
    voltages.update(zip(order, volts.tolist()))
    return VoltageSolution(source, grounded, voltages, 1.0, kcl)


def _is_tridiagonal(mat) -> bool:
    coo = mat.tocoo()
    return bool(np.all(np.abs(coo.row - coo.col) <= 1))


def reciprocity_matrix(net: ConductanceNetwork, grounded):
    """``R[a, c]`` = voltage at ``c`` for a unit source at ``a``.

    Each row is a separate voltage solve, so symmetry of ``R`` is a real
    check of reciprocity rather than a property of a single inverse.
    """
    order = [v for v in net.vertices if v not in set(grounded)]
    out = np.zeros((len(order), len(order)))
    for i, v in enumerate(order):
        sol = solve_voltages(net, v, grounded)
        out[i] = [sol[w] for w in order]
    return order, out


def dissipated_power(net: ConductanceNetwork, sol: VoltageSolution) -> float:
    return math.fsum(c * (sol[v] - sol[w]) ** 2 for (v, w), c in net._edges.items())


# --- line networks -------------------------------------------------------

def log_line_totals(chain: BirthDeathChain):
    """``log C(z)`` for every state of the window and the anchor state.

    ``C(anchor) = 1`` and ``C(z+1) / C(z) = r_z / l_{z+1}``; the anchor is 0
    when 0 is a non-absorbing state, else the nearest such state.
    """
    interior = chain.interior
    if not interior:
        raise DomainError("chain has no non-absorbing state")
    anchor = min(interior, key=lambda n: (abs(n), n))
    ci = anchor - chain.lo
    size = chain.size
    with np.errstate(divide="ignore"):
        logl, logr = np.log(chain.l), np.log(chain.r)
    out = np.zeros(size)
    # C(z) for z > anchor: prod r_anchor..r_{z-1} / prod l_{anchor+1}..l_z
    if ci + 1 < size:
        up = logr[ci:size - 1].copy()
        down = logl[ci + 1:size].copy()
        out[ci + 1:] = np.cumsum(up - down)
    # C(z) for z < anchor: prod l_anchor..l_{z+1} / prod r_{anchor-1}..r_z
    if ci > 0:
        up = logl[1:ci + 1][::-1]
        down = logr[0:ci][::-1]
        out[:ci] = np.cumsum(up - down)[::-1]
    return out, anchor


def line_conductances(chain: BirthDeathChain) -> ConductanceNetwork:
    """The line network whose walk is ``chain``.

    With 0 as anchor: ``C_{0,1} = r_0``, ``C_{-1,0} = l_0``, ``C_{0,0} = a_0``,
    and generally ``C_{z,z+1} = C(z) r_z``, ``C_{zz} = C(z) a_z``.  Windows not
    containing 0 are re-anchored at their non-absorbing state closest to 0.
    Absorbing endpoints become plain vertices without loops.  A
    non-absorbing endpoint sends its outward mass to an extra vertex just
    outside the window, so every row is represented.
    """
    ensure_valid(chain)
    log_tot, _ = log_line_totals(chain)
    lo = chain.lo
    edges = {}
    loops = {}
    for z in chain.states:
        i = z - lo
        if z in chain.absorbing:
            continue
        edges[(z, z + 1)] = math.exp(log_tot[i] + math.log(chain.r[i]))
        if z == lo or (z - 1) in chain.absorbing:
            edges[(z - 1, z)] = math.exp(log_tot[i] + math.log(chain.l[i]))
        if chain.a[i] > 0:
            loops[z] = math.exp(log_tot[i] + math.log(chain.a[i]))
    bad = [e for e, c in edges.items() if not (0 < c < math.inf)]
    if bad:
        raise SolverError(f"conductances under/overflow on edges {bad[:3]}; window too wide")
    vertices = sorted({v for e in edges for v in e} | set(chain.states))
    return ConductanceNetwork(vertices, edges, loops)


def green_via_voltage(chain: BirthDeathChain, x: int, y: int, net: ConductanceNetwork | None = None) -> GreenResult:
    """``G(x, y) = C(y) V(y)`` with a unit source at ``x`` and both
    absorbing endpoints grounded."""
    ensure_valid(chain)
    if not chain.absorbing:
        raise DomainError("the voltage route needs at least one absorbing endpoint")
    check_interior(chain, x, y)
    if net is None:
        net = line_conductances(chain)
    sol = solve_voltages(net, x, chain.absorbing)
    return GreenResult(net.total(y) * sol[y], Route.VOLTAGE, residual=sol.kcl_residual)


def ratio_via_conductance(chain: BirthDeathChain, x: int, y: int) -> float:
    """``C(y) / C(x)`` from the closed-form total conductances."""
    ensure_valid(chain)
    if x == y:
        raise DomainError(f"degenerate pair: x = y = {x}")
    check_interior(chain, x, y)
    log_tot, _ = log_line_totals(chain)
    return math.exp(log_tot[y - chain.lo] - log_tot[x - chain.lo])


def log_ratio_via_conductance(chain: BirthDeathChain, x: int, y: int) -> float:
    ensure_valid(chain)
    check_interior(chain, x, y)
    log_tot, _ = log_line_totals(chain)
    return float(log_tot[y - chain.lo] - log_tot[x - chain.lo])
