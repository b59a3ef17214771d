from fractions import Fraction

import numpy as np
import pytest

from greenchain import BirthDeathChain, Route, green, green_matrix, verify_theorem1
from greenchain.chain import symmetry_ratio
from greenchain.errors import DomainError
from greenchain.generate import random_chain

from oracles import dense_fundamental_matrix, hit_before, rational_fundamental_matrix


def test_symmetric_walk_rational_values(symmetric04):
    # (I - Q)^-1 for the walk on {1, 2, 3}: [[3/2, 1, 1/2], [1, 2, 1], [1/2, 1, 3/2]]
    states, exact = rational_fundamental_matrix(0, 4, {n: (Fraction(1, 2), 0, Fraction(1, 2))
                                                         for n in range(1, 4)})
    gm = green_matrix(symmetric04)
    assert gm.states == tuple(states)
    for i, x in enumerate(states):
        for j, y in enumerate(states):
            assert gm[x, y] == pytest.approx(float(exact[i, j]), rel=1e-15)
    assert gm[2, 2] == 2.0
    assert gm[1, 3] == gm[3, 1] == pytest.approx(0.5, rel=1e-15)


def test_green_result_carries_route_and_residual(symmetric04):
    res = green(symmetric04, 2, 2)
    assert res.route is Route.EXACT
    assert res.value == pytest.approx(2.0, rel=1e-15)
    assert res.stderr is None and res.residual <= 1e-10 and not res.flagged


def test_lazy_chain_against_rationals():
    rows = {1: (Fraction(1, 5), Fraction(1, 2), Fraction(3, 10)),
            2: (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)),
            3: (Fraction(3, 5), Fraction(1, 10), Fraction(3, 10))}
    chain = BirthDeathChain.from_rows(0, 4, {n: tuple(map(float, v)) for n, v in rows.items()},
                                      absorbing=(0, 4))
    states, exact = rational_fundamental_matrix(0, 4, rows)
    gm = green_matrix(chain)
    want = np.array(exact.tolist(), dtype=float)
    np.testing.assert_allclose(gm.values, want, rtol=1e-14)


def test_matches_dense_inverse(lazy_chains):
    for chain in lazy_chains:
        gm = green_matrix(chain)
        np.testing.assert_allclose(gm.values, dense_fundamental_matrix(chain), rtol=1e-11)
        assert gm.residual <= 1e-10
        assert np.all(np.diag(gm.values) >= 1.0)
        assert np.all(gm.values > 0)


def test_row_sums_are_absorption_times(lazy_chains):
    for chain in lazy_chains:
        n = chain.size - 2
        q = np.zeros((n, n))
        for i in range(n):
            s = i + 1
            q[i, i] = chain.a[s]
            if i:
                q[i, i - 1] = chain.l[s]
            if i < n - 1:
                q[i, i + 1] = chain.r[s]
        times = np.linalg.solve(np.eye(n) - q, np.ones(n))
        np.testing.assert_allclose(green_matrix(chain).absorption_times(), times, rtol=1e-11)


def test_first_passage_decomposition(rng):
    # G(x, y) = P_x(hit y before absorption) * G(y, y), for x < y
    for _ in range(5):
        chain = random_chain(rng, -6, 6, max_lazy=0.0)
        gm = green_matrix(chain)
        for x in range(-5, 5):
            for y in range(x + 1, 6):
                h = hit_before(chain, x, y, chain.lo)
                assert gm[x, y] == pytest.approx(h * gm[y, y], rel=1e-9)


def test_grows_with_window(rng):
    # enlarging the window only adds paths, so G(0, 0) cannot decrease
    l, r = 0.45, 0.55
    values = [green(BirthDeathChain.uniform(-d, d, l, 0.0, r), 0, 0).value for d in range(1, 30)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_product_ratio_holds(lazy_chains):
    for chain in lazy_chains:
        check = verify_theorem1(chain)
        assert check.passed, check
        assert check.max_deviation <= 1e-9


def test_product_ratio_under_heavy_laziness(rng):
    for _ in range(5):
        chain = random_chain(rng, -10, 10, max_lazy=0.9)
        assert verify_theorem1(chain).max_deviation <= 1e-9


def test_ratio_pairs_directly(rng):
    chain = random_chain(rng)
    gm = green_matrix(chain)
    for j, k in [(-11, 11), (-3, 5), (4, -2)]:
        assert gm[j, k] / gm[k, j] == pytest.approx(symmetry_ratio(chain, j, k), rel=1e-10)


def test_domain_errors(symmetric04):
    with pytest.raises(DomainError):
        green(symmetric04, 0, 2)
    with pytest.raises(DomainError):
        green(symmetric04, 2, 7)
    open_chain = BirthDeathChain.uniform(0, 4, 0.5, 0.0, 0.5, absorbing=(0,))
    with pytest.raises(DomainError):
        green_matrix(open_chain)
