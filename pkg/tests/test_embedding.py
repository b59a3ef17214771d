import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenchain import (BirthDeathChain, Route, build_embedding, expected_local_time, green,
                        green_via_local_time, remove_laziness)
from greenchain.chain import symmetry_ratio
from greenchain.embedding import green_from_embedding, log_local_time, log_visit_local_time
from greenchain.errors import DomainError, PreconditionError
from greenchain.exact import green_matrix
from greenchain.generate import random_chain


def test_symmetric_spacings():
    emb = build_embedding(BirthDeathChain.uniform(-5, 5, 0.5, 0.0, 0.5))
    assert emb.anchor == 0
    np.testing.assert_allclose(np.abs(emb.t), 0.5, rtol=1e-15)
    for n in range(0, 6):
        assert emb.x_at(n) == pytest.approx(n / 2, abs=1e-15)
    assert emb.t_at(0) == 0.5 and emb.t_at(-1) == -0.5


def test_drifted_spacings_halve():
    emb = build_embedding(BirthDeathChain.uniform(-6, 12, 1 / 3, 0.0, 2 / 3))
    for n in range(1, 12):
        assert emb.t_at(n) == pytest.approx((1 / 3) * 0.5 ** n, rel=1e-13)


def test_hand_products_on_five_states():
    rows = {-1: (0.3, 0.0, 0.7), 0: (0.4, 0.0, 0.6), 1: (0.25, 0.0, 0.75)}
    chain = BirthDeathChain.from_rows(-2, 2, rows, absorbing=(-2, 2))
    emb = build_embedding(chain)
    # t_0 = l_0, t_1 = l_0 * l_1 / r_1, t_{-1} = -r_0, t_{-2} = -r_0 * r_{-1} / l_{-1}
    assert emb.t_at(0) == pytest.approx(0.4, rel=1e-15)
    assert emb.t_at(1) == pytest.approx(0.4 * 0.25 / 0.75, rel=1e-15)
    assert emb.t_at(-1) == pytest.approx(-0.6, rel=1e-15)
    assert emb.t_at(-2) == pytest.approx(-0.6 * 0.7 / 0.3, rel=1e-15)
    assert emb.x_minus_inf == pytest.approx(-(0.6 + 0.6 * 0.7 / 0.3), rel=1e-15)


def test_spacing_ratio_identity(rng):
    chain = remove_laziness(random_chain(rng, -10, 10))
    emb = build_embedding(chain)
    i = lambda n: n - chain.lo
    for lo_n, n in [(0, 5), (2, 9), (-1, 3)]:
        prod = np.prod(chain.l[i(lo_n) + 1:i(n) + 1]) / np.prod(chain.r[i(lo_n) + 1:i(n) + 1])
        if lo_n >= 0:
            assert emb.t_at(n) / emb.t_at(lo_n) == pytest.approx(prod, rel=1e-12)


def test_anchor_moves_off_absorbing_zero():
    emb = build_embedding(BirthDeathChain.uniform(0, 4, 0.5, 0.0, 0.5))
    assert emb.anchor == 1 and emb.x_at(1) == 0.0


def test_points_strictly_increase(rng):
    for _ in range(20):
        emb = build_embedding(remove_laziness(random_chain(rng)))
        assert np.all(np.diff(emb.x) > 0)
        assert np.all(emb.t[emb.anchor - emb.lo:] > 0) and np.all(emb.t[:emb.anchor - emb.lo] < 0)


def test_lazy_chain_is_rejected():
    with pytest.raises(PreconditionError, match="remove_laziness"):
        build_embedding(BirthDeathChain.uniform(-2, 2, 0.25, 0.5, 0.25))


def test_expected_local_time_values():
    assert expected_local_time(0.0, 2.0, 1.0, 1.0) == 1.0
    assert expected_local_time(0.0, 4.0, 1.0, 3.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        expected_local_time(0.0, 1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        expected_local_time(1.0, 0.0, 0.5, 0.5)


def test_expected_local_time_vanishes_at_boundary():
    for eps in (1e-3, 1e-6, 1e-9):
        assert expected_local_time(-1.0, 3.0, 0.5, -1.0 + eps) < 3 * eps
        assert expected_local_time(-1.0, 3.0, 0.5, 3.0 - eps) < 3 * eps


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 50), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_expected_local_time_symmetric(a, width, fz, fy):
    b = a + width
    z, y = a + fz * width, a + fy * width
    assert expected_local_time(a, b, z, y) == pytest.approx(expected_local_time(a, b, y, z),
                                                            rel=1e-12, abs=1e-12 * width)
    assert expected_local_time(a, b, z, z) == pytest.approx(2 * (b - z) * (z - a) / (b - a),
                                                            rel=1e-12, abs=1e-12 * width)


def test_factored_form_matches_literal_formula(rng):
    chain = remove_laziness(random_chain(rng, -6, 6))
    emb = build_embedding(chain)
    x = emb.x
    for z in range(-5, 6):
        for y in range(-5, 6):
            literal = expected_local_time(x[0], x[-1], x[z + 6], x[y + 6])
            assert math.exp(log_local_time(emb, -6, 6, z, y)) == pytest.approx(literal, rel=1e-10)


def test_visit_denominator_identity(rng):
    chain = remove_laziness(random_chain(rng))
    emb = build_embedding(chain)
    x = emb.x
    for k in range(-11, 12):
        i = k - chain.lo
        one_step = expected_local_time(x[i - 1], x[i + 1], x[i], x[i])
        t0, t1 = abs(emb.t[i - 1]), abs(emb.t[i])
        assert math.exp(log_visit_local_time(emb, k)) == pytest.approx(one_step, rel=1e-12)
        assert one_step == pytest.approx(2 * t0 * t1 / (t0 + t1), rel=1e-12)


def test_symmetric_walk_example():
    res = green_via_local_time(BirthDeathChain.uniform(0, 4, 0.5, 0.0, 0.5), 2, 2)
    assert res.route is Route.LOCAL_TIME
    assert res.value == pytest.approx(2.0, rel=1e-14)


def test_matches_exact_route(rng):
    for _ in range(25):
        chain = random_chain(rng)
        gm = green_matrix(chain)
        for j, k in [(-11, 11), (0, 0), (3, -4), (10, 10), (-7, -6)]:
            assert green_via_local_time(chain, j, k).value == pytest.approx(gm[j, k], rel=1e-9)


def test_ratio_reproduces_product(rng):
    chain = remove_laziness(random_chain(rng))
    emb = build_embedding(chain)
    for j, k in [(-10, 10), (-1, 0), (4, 7)]:
        ratio = (green_from_embedding(emb, j, k, chain.lo, chain.hi)
                 / green_from_embedding(emb, k, j, chain.lo, chain.hi))
        assert ratio == pytest.approx(symmetry_ratio(chain, j, k), rel=1e-10)


def test_rescaling_spacings_leaves_green_unchanged(rng):
    chain = remove_laziness(random_chain(rng))
    emb = build_embedding(chain)
    for c in (1e-6, 0.3, 7.0, 1e8):
        big = emb.scaled(c)
        for j, k in [(-3, 2), (5, 5)]:
            assert green_from_embedding(big, j, k, chain.lo, chain.hi) == pytest.approx(
                green_from_embedding(emb, j, k, chain.lo, chain.hi), rel=1e-12)


def test_strong_drift_wide_window():
    # spacings span far more than a double's exponent range
    chain = BirthDeathChain.uniform(-400, 400, 0.05, 0.0, 0.95)
    ref = green(chain, 0, 0).value
    assert green_via_local_time(chain, 0, 0).value == pytest.approx(ref, rel=1e-9)
    assert green_via_local_time(chain, 300, -300).value >= 0.0


def test_needs_two_absorbing_ends():
    chain = BirthDeathChain.uniform(0, 6, 0.5, 0.0, 0.5, absorbing=(0,))
    with pytest.raises(DomainError):
        green_via_local_time(chain, 2, 3)
