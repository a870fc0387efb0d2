from fractions import Fraction

import pytest

from diffalg.derivation import commutator
from diffalg.diffpoly import v, w
from hierarchy.kdv import (
    evolutionary_derive,
    fit_kdv_scale,
    generate_kdv,
    kdv_family,
    kdv_generator,
    r0_bracket,
    rescaled_kdv_generator,
)
from hierarchy.lattice import X, Y, LatticePair, lax_matrix
from hierarchy.toda import (
    SLOW_COMBINATION,
    flow_generator,
    generate_toda,
    lattice_bracket,
    slow_generator,
    slow_scale,
    toda_combination,
    toda_generator,
)
from shared.workers import WorkerPool


def test_first_toda_flow():
    assert toda_generator(1) == LatticePair(Y(-1) - Y(0), Y(0) * (X(0) - X(1)))
    assert toda_generator(1).offsets() == (-1, 1)


def test_slow_combination_display():
    pair = toda_combination(SLOW_COMBINATION)
    expected_x = (
        X(-1) * Y(-1) + X(0) * Y(-1) + Y(-1) * 2
        - X(0) * Y(0) - X(1) * Y(0) - Y(0) * 2
    )
    expected_y = Y(0) * (Y(-1) + X(0) ** 2 + X(0) * 2 - X(1) ** 2 - X(1) * 2 - Y(1))
    assert pair.p1 == expected_x
    assert pair.p2 == expected_y


@pytest.mark.parametrize("j,k", [(1, 2), (1, 3), (2, 3)])
def test_toda_flows_commute_on_the_lattice(j, k):
    assert lattice_bracket(toda_generator(j), toda_generator(k)).is_zero()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lax_powers_widen_by_one_band(k):
    assert lax_matrix().power(k).half_width == k


def test_toda_index_starts_at_one():
    with pytest.raises(ValueError):
        toda_generator(0)


def test_generate_toda_keeps_order_under_a_pool():
    with WorkerPool(3, name="test") as pool:
        pairs = generate_toda([3, 1, 2], pool)
    assert pairs == [toda_generator(3), toda_generator(1), toda_generator(2)]


def test_first_kdv_flows():
    assert kdv_generator(0) == w(1)
    assert kdv_generator(1) == w(3) + w(0) * w(1)
    assert kdv_generator(2) == (
        w(5)
        + w(0) * w(3) * Fraction(5, 3)
        + w(1) * w(2) * Fraction(10, 3)
        + w(0) ** 2 * w(1) * Fraction(5, 6)
    )
    assert kdv_family(3) == [kdv_generator(0), kdv_generator(1), kdv_generator(2)]
    with pytest.raises(ValueError):
        kdv_generator(-1)


def test_generate_kdv_matches_direct_calls():
    assert generate_kdv([2, 0]) == [kdv_generator(2), kdv_generator(0)]


def test_translation_acts_as_total_derivative():
    p = kdv_generator(1)
    assert evolutionary_derive(w(1), p) == p.partial()


@pytest.mark.parametrize("i,j", [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
def test_kdv_flows_commute(i, j):
    assert r0_bracket(kdv_generator(i), kdv_generator(j)).is_zero()


def test_rescaled_kdv_flows():
    assert rescaled_kdv_generator(0, Fraction(12)) == w(1)
    assert rescaled_kdv_generator(1, Fraction(12)) == w(3) + w(0) * w(1) * 12
    assert rescaled_kdv_generator(2, Fraction(12)) == (
        w(5)
        + w(0) * w(3) * 20
        + w(1) * w(2) * 40
        + w(0) ** 2 * w(1) * 120
    )
    assert rescaled_kdv_generator(2) == kdv_generator(2)
    assert kdv_family(2, Fraction(12))[1] == rescaled_kdv_generator(1, Fraction(12))
    with pytest.raises(ValueError):
        rescaled_kdv_generator(1, Fraction(0))


@pytest.mark.parametrize("i,j", [(0, 2), (1, 2), (1, 3)])
def test_rescaled_kdv_flows_commute(i, j):
    scale = Fraction(12)
    assert r0_bracket(rescaled_kdv_generator(i, scale), rescaled_kdv_generator(j, scale)).is_zero()


def test_kdv_scale_fitted_from_leading_terms():
    leads = [w(1) * -1, w(3) * Fraction(-1, 4) - w(0) * w(1) * 3]
    assert fit_kdv_scale(leads) == 12
    assert fit_kdv_scale([w(3) + w(0) * w(1)]) == 1
    assert fit_kdv_scale([w(1)]) is None


@pytest.mark.slow
@pytest.mark.parametrize("i,j", [(1, 4), (2, 4), (3, 4)])
def test_higher_kdv_flows_commute(i, j):
    assert r0_bracket(kdv_generator(i), kdv_generator(j)).is_zero()


def test_slow_flow_normalization():
    assert slow_scale() == Fraction(-1, 2)
    D = slow_generator(2)
    assert D.img_v.coefficient(0) == v(1) - w(1)
    assert D.img_w.coefficient(0) == w(1) - v(1)


def test_slow_generator_needs_two_orders():
    with pytest.raises(ValueError):
        slow_generator(1)


def test_conjugated_toda_flows_commute():
    bracket = commutator(flow_generator(1, 3), flow_generator(2, 3))
    assert bracket.is_zero()
