import numpy as np
import pytest

from greenchain import (TreeChain, assign_conductances, green_tree, path_ratio,
                        recover_probabilities, tree_path)
from greenchain.errors import DomainError, ShapeError, SolverError, ValidationError
from greenchain.exact import green_matrix
from greenchain.generate import random_chain, random_tree_chain, random_tree_edges
from greenchain.network import ConductanceNetwork
from greenchain.tree import (green_tree_matrix, green_tree_via_voltage, log_path_ratio,
                             tree_from_dict, tree_to_dict)

from oracles import dense_tree_green


def _example_tree():
    """Path 1-2-3-4-5 with a pendant leaf at 2 and at 4.

    Along 2-3-4: p(2,3) = 0.9, p(3,4) = 0.8, p(3,2) = 0.2, p(4,3) = 0.5, so
    G(2,4) / G(4,2) = 0.72 / 0.10 = 36/5.
    """
    edges = [(1, 2), (2, 3), (3, 4), (4, 5), (2, 6), (4, 7)]
    rows = {2: {1: 0.05, 3: 0.9, 6: 0.05},
            3: {2: 0.2, 4: 0.8},
            4: {3: 0.5, 5: 0.3, 7: 0.1, 4: 0.1}}
    return TreeChain(range(1, 8), edges, rows)


def test_two_vertex_tree():
    tc = TreeChain(["j", "k"], [("j", "k")], {"j": {"k": 0.4, "j": 0.6}, "k": {"j": 0.25, "k": 0.75}},
                   leaves=[])
    net = assign_conductances(tc, root="j", seed=1.0)
    assert net.conductance("j", "k") == 1.0
    assert net.total("j") == pytest.approx(1 / 0.4, rel=1e-15)
    assert net.total("k") == pytest.approx(1 / 0.25, rel=1e-15)


def test_three_vertex_path_total():
    rows = {"j": {"v": 0.5, "j": 0.5}, "v": {"j": 0.3, "k": 0.6, "v": 0.1}, "k": {"v": 0.7, "k": 0.3}}
    tc = TreeChain(["j", "v", "k"], [("j", "v"), ("v", "k")], rows, leaves=[])
    net = assign_conductances(tc, root="j", seed=1.0)
    assert net.conductance("j", "v") == 1.0
    assert net.total("k") == pytest.approx(0.6 / (0.7 * 0.3), rel=1e-14)


def test_round_trip_and_seed_invariance(rng):
    worst = 0.0
    for _ in range(100):
        tc = random_tree_chain(rng)
        root = tc.vertices[int(rng.integers(len(tc.vertices)))]
        nets = [assign_conductances(tc, root, s) for s in (0.5, 1.0, 7.0)]
        for net in nets:
            back = recover_probabilities(net)
            assert back.leaves == tc.leaves
            for v in tc.interior:
                for w in list(tc.adj[v]) + [v]:
                    worst = max(worst, abs(back.p(v, w) - tc.p(v, w)))
        # conductances differ by the global seed factor only
        for (e, c) in nets[0].edges.items():
            assert nets[2].edges[e] == pytest.approx(14 * c, rel=1e-12)
    assert worst <= 1e-12


def test_total_matches_row_identity(rng):
    tc = random_tree_chain(rng, n=30)
    net = assign_conductances(tc, seed=2.5)
    for v in tc.interior:
        for u in tc.adj[v]:
            assert net.total(v) == pytest.approx(net.conductance(v, u) / tc.p(v, u), rel=1e-12)


def test_uniform_star():
    net = ConductanceNetwork(range(5), {(0, i): 1.0 for i in range(1, 5)})
    tc = recover_probabilities(net)
    assert tc.interior == (0,)
    assert [tc.p(0, i) for i in range(1, 5)] == [0.25] * 4
    with pytest.raises(ShapeError):
        recover_probabilities(ConductanceNetwork(range(3), {(0, 1): 1, (1, 2): 1, (0, 2): 1}))


def test_path_ratio_adjacent_and_symmetric(rng):
    tc = random_tree_chain(rng, n=20)
    for v in tc.interior:
        for w in tc.adj[v]:
            if w in tc.interior:
                assert path_ratio(tc, v, w) == pytest.approx(tc.p(v, w) / tc.p(w, v), rel=1e-14)
    # symmetric edge probabilities p(v, w) = p(w, v) = 1/16, holding takes the rest
    edges = random_tree_edges(rng, 15)
    adj = {v: [] for v in range(15)}
    for u, w in edges:
        adj[u].append(w)
        adj[w].append(u)
    rows = {v: {**{w: 1 / 16 for w in nb}, v: 1 - len(nb) / 16} for v, nb in adj.items()
            if len(nb) > 1}
    sym = TreeChain(range(15), edges, rows)
    for j in sym.interior:
        for k in sym.interior:
            if j != k:
                assert path_ratio(sym, j, k) == pytest.approx(1.0, rel=1e-13)


def test_path_ratio_matches_exact_solve(rng):
    for _ in range(100):
        tc = random_tree_chain(rng)
        states, g = dense_tree_green(tc)
        idx = {v: i for i, v in enumerate(states)}
        for _ in range(5):
            j, k = (states[int(i)] for i in rng.choice(len(states), 2, replace=False))
            want = g[idx[j], idx[k]] / g[idx[k], idx[j]]
            assert path_ratio(tc, j, k) == pytest.approx(want, rel=1e-9)


def test_path_ratio_algebra(rng):
    tc = random_tree_chain(rng, n=40, min_interior=10)
    inner = tc.interior
    for _ in range(30):
        j, k = (inner[int(i)] for i in rng.choice(len(inner), 2, replace=False))
        assert path_ratio(tc, j, k) * path_ratio(tc, k, j) == pytest.approx(1.0, abs=1e-12)
        for m in tree_path(tc, j, k).intermediate:
            assert path_ratio(tc, j, m) * path_ratio(tc, m, k) == pytest.approx(
                path_ratio(tc, j, k), rel=1e-12)


def test_tree_path_shape():
    tc = _example_tree()
    p = tree_path(tc, 1, 5)
    assert p.vertices == (1, 2, 3, 4, 5) and p.length == 4
    assert tree_path(tc, 6, 7).intermediate == (2, 3, 4)
    with pytest.raises(DomainError):
        tree_path(tc, 3, 3)


def test_example_ratio_36_over_5():
    tc = _example_tree()
    assert path_ratio(tc, 2, 4) == pytest.approx(36 / 5, rel=1e-12)
    ratio = green_tree(tc, 2, 4).value / green_tree(tc, 4, 2).value
    assert ratio == pytest.approx(7.2, abs=1e-9)


def test_single_interior_vertex():
    for stay in (0.0, 0.3, 0.9):
        rest = (1 - stay) / 3
        tc = TreeChain(range(4), [(0, 1), (0, 2), (0, 3)], {0: {0: stay, 1: rest, 2: rest, 3: rest}})
        assert green_tree(tc, 0, 0).value == pytest.approx(1 / (1 - stay), rel=1e-14)


def test_line_shaped_tree_matches_line_chain(rng):
    for _ in range(10):
        chain = random_chain(rng, 0, 15)
        rows = {n: {n - 1: chain.l[n], n: chain.a[n], n + 1: chain.r[n]} for n in chain.interior}
        tc = TreeChain(chain.states, [(n, n + 1) for n in range(15)], rows)
        np.testing.assert_allclose(green_tree_matrix(tc).values, green_matrix(chain).values,
                                   rtol=1e-12)


def test_star_hub_symmetric_under_leaf_swap():
    rows = {0: {1: 0.2, 2: 0.2, 3: 0.2, 4: 0.2, 0: 0.2}}
    tc = TreeChain(range(5), [(0, i) for i in range(1, 5)], rows)
    assert green_tree(tc, 0, 0).value == pytest.approx(1.25, rel=1e-15)


def test_tree_solver_against_dense(rng):
    for _ in range(30):
        tc = random_tree_chain(rng)
        states, g = dense_tree_green(tc)
        gm = green_tree_matrix(tc)
        assert gm.states == tuple(states)
        np.testing.assert_allclose(gm.values, g, rtol=1e-10)
        assert gm.residual <= 1e-10


def test_voltage_route_and_conductance_ratio(rng):
    for _ in range(20):
        tc = random_tree_chain(rng, max_vertices=30)
        inner = tc.interior
        j, k = (inner[int(i)] for i in rng.choice(len(inner), 2, replace=False))
        g = green_tree(tc, j, k).value
        assert green_tree_via_voltage(tc, j, k).value == pytest.approx(g, rel=1e-9)
        for seed in (0.5, 7.0):
            net = assign_conductances(tc, seed=seed)
            ratio = g / green_tree(tc, k, j).value
            assert ratio == pytest.approx(net.total(k) / net.total(j), rel=1e-9)


def test_off_path_branches_leave_ratio_unchanged(rng):
    base_edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
    base = {1: {0: 0.3, 2: 0.4, 1: 0.3}, 2: {1: 0.25, 3: 0.35, 2: 0.4}, 3: {2: 0.5, 4: 0.2, 3: 0.3}}
    plain = TreeChain(range(5), base_edges, base)
    want = green_tree(plain, 1, 3).value / green_tree(plain, 3, 1).value
    assert want == pytest.approx(0.4 * 0.35 / (0.5 * 0.25), rel=1e-12)
    for _ in range(20):
        # graft a random subtree onto a path vertex, paid for out of its holding mass
        extra = random_tree_chain(rng, max_vertices=12)
        shift = 5
        graft_at = int(rng.integers(1, 4))
        root = extra.interior[0] + shift
        edges = base_edges + [(u + shift, w + shift) for u, w in extra.edges] + [(graft_at, root)]
        rows = {v: dict(r) for v, r in base.items()}
        take = float(rng.uniform(0.01, rows[graft_at][graft_at]))
        rows[graft_at][graft_at] -= take
        rows[graft_at][root] = take
        for v in extra.interior:
            rows[v + shift] = {w + shift: p for w, p in extra.row(v).items()}
        # the graft root gains a neighbour: scale its row down to make room
        rows[root] = {w: 0.9 * p for w, p in rows[root].items()}
        rows[root][graft_at] = 0.1
        vertices = list(range(5)) + [v + shift for v in extra.vertices]
        tc = TreeChain(vertices, edges, rows)
        got = green_tree(tc, 1, 3).value / green_tree(tc, 3, 1).value
        assert got == pytest.approx(want, rel=1e-9)


def test_from_host_keeps_consistent_rows_and_rejects_leaking_ones():
    host = _example_tree()
    sub = TreeChain.from_host(host, [2, 3, 4, 1, 6, 5, 7])
    assert sub.leaves == host.leaves
    # 2 and 4 become leaves; 3 keeps all its mass inside
    assert TreeChain.from_host(host, [2, 3, 4]).interior == (3,)
    # 2 stays interior but sends mass to the dropped vertex 6
    with pytest.raises(ValidationError, match="outside the subtree"):
        TreeChain.from_host(host, [1, 2, 3, 4, 5])
    with pytest.raises(ValidationError):
        TreeChain.from_host(host, [3, 99])


def test_tree_validation():
    with pytest.raises(ValidationError, match="row sum"):
        TreeChain(range(3), [(0, 1), (1, 2)], {1: {0: 0.5, 2: 0.6}})
    with pytest.raises(ValidationError, match="must be > 0"):
        TreeChain(range(3), [(0, 1), (1, 2)], {1: {0: 1.0, 2: 0.0}})
    with pytest.raises(ValidationError):
        TreeChain(range(3), [(0, 1), (1, 2), (0, 2)], {})
    with pytest.raises(ValidationError, match="degree"):
        TreeChain(range(3), [(0, 1), (1, 2)], {0: {1: 1.0}, 2: {1: 1.0}}, leaves=[1])
    with pytest.raises(DomainError):
        path_ratio(_example_tree(), 1, 3)
    with pytest.raises(DomainError):
        log_path_ratio(_example_tree(), 2, 99)


def test_no_leaves_is_singular():
    tc = TreeChain(["a", "b"], [("a", "b")], {"a": {"b": 1.0}, "b": {"a": 1.0}}, leaves=[])
    with pytest.raises(SolverError):
        green_tree(tc, "a", "b")


def test_tree_spec_round_trip():
    tc = _example_tree()
    again = tree_from_dict(tree_to_dict(tc))
    assert again.leaves == tc.leaves
    for v in tc.interior:
        assert again.row(v) == tc.row(v)
