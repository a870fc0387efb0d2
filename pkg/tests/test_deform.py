import json
from fractions import Fraction

import pytest
from pydantic import ValidationError

from deform.bounds import (
    DEFAULT_TOLERANCE,
    PRINTED_BOUNDS,
    bound_value,
    bounds_table,
    reconcile_bounds,
    render_decimal,
    verify_bound_rule,
)
from deform.cache import StateCache
from deform.charnums import characteristic_numbers
from deform.errors import OrderNotReached, TruncationTooShallow
from deform.induced import commute_check, induce, induce_many
from deform.linalg import change_of_basis, solve_combination, span_equal
from deform.recursion import SLOW, deform_to, residual
from deform.state import GaugeRecord
from diffalg.diffpoly import w
from hierarchy.kdv import kdv_family, kdv_generator

SEED = 20240517

Q1 = w(1) * Fraction(-1, 2)
Q2 = w(0) ** 2 * Fraction(-1, 4) + w(2) * Fraction(1, 8)


def test_first_corrections(state3):
    assert state3.order == 3
    assert state3.coefficient(0) == w(0)
    assert state3.coefficient(1) == Q1
    assert state3.coefficient(2) == Q2
    assert state3.gauge.recursion_constant == "-1/2"
    assert state3.gauge.slow_scale == "-1/2"


def test_log_records_exact_homogeneous_steps(state3):
    assert [r.order for r in state3.log] == [0, 1, 2]
    for record in state3.log:
        assert record.exact
        assert record.weight == record.order + 2


def test_slow_flow_preserves_the_ideal(state3):
    assert residual(state3, SLOW, 3).is_zero()


@pytest.mark.parametrize("k", [2, 3])
def test_toda_flows_preserve_the_ideal(state3, k):
    assert residual(state3, k, 3).is_zero()


def test_residual_beyond_the_state_order(state3):
    with pytest.raises(OrderNotReached):
        residual(state3, 1, 4)


def test_induced_flows_commute(state5):
    a, b = induce_many(state5, [1, 2])
    assert commute_check(a, b, 5).is_zero()


def test_induced_slow_flow_is_labelled(state5):
    flow = induce(state5, SLOW)
    assert flow.source == SLOW
    assert flow.trunc == 5


def test_characteristic_numbers_of_two_flows(state5):
    flows = induce_many(state5, [1, 2])
    report = characteristic_numbers(flows, 5)
    assert report.pivots == [1, 3]
    assert report.kdv_scale == "12/1"
    assert report.span_equal
    assert len(report.change_of_basis) == 2


def test_characteristic_numbers_need_depth(state5):
    flows = induce_many(state5, [1, 2], N=4)
    with pytest.raises(TruncationTooShallow):
        characteristic_numbers(flows, 4)


def test_linear_algebra_over_the_rationals():
    family = kdv_family(3)
    target = kdv_generator(1) * 3 - w(1) * Fraction(1, 2)
    assert solve_combination(family, target) == [Fraction(-1, 2), Fraction(3), Fraction(0)]
    assert solve_combination(family[:2], kdv_generator(2)) is None
    assert span_equal([family[1] + family[0], family[0]], family[:2])
    assert not span_equal(family[:2], family[1:])
    assert change_of_basis([target], family)[0][1] == 3


def test_bound_values(state3):
    assert bound_value(Q1) == Fraction(1, 2)
    assert bound_value(Q2) == Fraction(1, 2)
    table = bounds_table(state3, 2)
    assert [row.n for row in table.rows] == [1, 2]
    assert table.rows[1].exact == "1/2"
    assert table.rows[1].decimal == "0.500"
    assert table.value(1) == Fraction(1, 2)
    assert table.to_tsv().splitlines()[0] == "n\tK_n_exact\tK_n_dec"
    with pytest.raises(OrderNotReached):
        bounds_table(state3, 3)


def test_render_decimal_rounds_half_away_from_zero():
    assert render_decimal(Fraction(1, 2)) == "0.500"
    assert render_decimal(Fraction(5, 16)) == "0.313"
    assert render_decimal(Fraction(1, 2000)) == "0.001"
    assert render_decimal(Fraction(-1, 8)) == "-0.125"


def test_bound_rule_holds_for_second_correction():
    assert verify_bound_rule(Q2, seed=SEED)


def test_reconcile_against_printed_table(state3):
    report = bounds_table(state3, 2)
    assert reconcile_bounds(report, state3).status == "match"


def test_bounds_to_five_match_printed_values(state6):
    report = bounds_table(state6, 5)
    assert [row.decimal for row in report.rows] == ["0.500", "0.500", "0.375", "0.359", "0.313"]
    for row in report.rows[1:]:
        assert abs(float(Fraction(row.exact)) - float(PRINTED_BOUNDS[row.n])) <= DEFAULT_TOLERANCE
    assert reconcile_bounds(report, state6, seed=SEED).status == "match"


def test_reconcile_runs_the_audit_on_mismatch(state3):
    report = bounds_table(state3, 2)
    outcome = reconcile_bounds(report, state3, reference={2: ".900"}, seed=SEED)
    assert outcome.status == "degraded"
    assert outcome.mismatches[0]["printed"] == ".900"
    assert outcome.audit == {2: str(Q2)}
    assert outcome.positive and outcome.bound_rule
    assert any(entry.ok and entry.recursion_constant == "-1/2" for entry in outcome.sweep)


def test_gauge_validation():
    with pytest.raises(ValidationError):
        GaugeRecord(slow_sign=2)
    with pytest.raises(ValidationError):
        GaugeRecord(recursion_candidates=("0",))
    with pytest.raises(ValidationError):
        GaugeRecord(recursion_constant="half")
    with pytest.raises(ValidationError):
        GaugeRecord(integration_constant="free")


def test_truncated_state(state5):
    lower = state5.truncated_to(2)
    assert lower.order == 2
    assert lower.coefficient(1) == Q1
    assert lower.coefficient(2).is_zero()
    assert len(lower.log) == 2
    assert state5.truncated_to(7) is state5


def test_cache_round_trip(tmp_path, state3):
    cache = StateCache(tmp_path)
    path = cache.save(state3)
    assert path.exists()
    loaded = cache.load(GaugeRecord(), 3)
    assert loaded.Q == state3.Q
    assert loaded.gauge == state3.gauge
    assert cache.load(GaugeRecord(), 2).order == 2
    assert cache.load(GaugeRecord(slow_sign=-1)) is None


def test_tampered_cache_file_is_discarded(tmp_path, state3):
    cache = StateCache(tmp_path)
    path = cache.save(state3)
    document = json.loads(path.read_text(encoding="utf-8"))
    document["payload"]["order"] = 7
    path.write_text(json.dumps(document), encoding="utf-8")
    assert cache.load(GaugeRecord()) is None
    assert not path.exists()


def test_resumed_deformation_matches_a_fresh_one(tmp_path, state5):
    cache = StateCache(tmp_path)
    deform_to(3, cache=cache)
    resumed = deform_to(5, cache=cache)
    assert resumed.Q == state5.Q
    assert cache.load(GaugeRecord()).order == 5


@pytest.mark.slow
@pytest.mark.parametrize("k", [SLOW, 2, 3])
def test_flows_preserve_the_ideal_to_order_eight(state8, k):
    assert residual(state8, k, 8).is_zero()


@pytest.mark.slow
def test_three_flows_commute_and_normalize(state8):
    flows = induce_many(state8, [1, 2, 3])
    for i in range(3):
        for j in range(i + 1, 3):
            assert commute_check(flows[i], flows[j], 8).is_zero()
    report = characteristic_numbers(flows, 8)
    assert report.pivots == [1, 3, 5]
    assert report.kdv_scale == "12/1"
    assert report.span_equal


@pytest.mark.slow
def test_bounds_to_twelve():
    state = deform_to(13)
    report = bounds_table(state, 12)
    assert all(Fraction(row.exact) > 0 for row in report.rows)
    outcome = reconcile_bounds(report, state, seed=SEED)
    assert outcome.status == "match"
    assert not outcome.mismatches
    assert report.value(1) == Fraction(1, 2)
    for row in report.rows[1:]:
        assert abs(float(Fraction(row.exact)) - float(PRINTED_BOUNDS[row.n])) <= DEFAULT_TOLERANCE
