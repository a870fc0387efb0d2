import numpy as np
import pytest
from pydantic import ValidationError

from diffalg.diffpoly import w
from diffalg.jets import jet_eval
from hierarchy.lattice import X, LatticePair, LatticePoly
from hierarchy.toda import toda_generator
from numlab.errors import Blowup, LatticeError, PoleHit
from numlab.lattice import (
    PeriodicLattice,
    flow_commutator_defect,
    integrate_flow,
    isospectral_drift,
    lattice_flow_eval,
    random_lattice,
    rk4_error_ratio,
    shift_consistency_order,
    trace_invariants,
)
from numlab.slow import slow_order_sweep, slopes_monotone
from numlab.taylor import Jet
from numlab.theta import (
    DegenerateThetaParams,
    theta_B,
    theta_B_identities,
    theta_B_v0,
    theta_H,
    theta_H_derivative_check,
    theta_H_limit,
    theta_samples,
)
from numlab.trig import TrigFunction, TrigSpec, TrigTerm

SEED = 20240517
S = 0.35 + 0.2j
BETA = 1j


def test_jet_arithmetic():
    product = Jet([1.0, 2.0, 3.0]) * Jet([1.0, 1.0, 0.0])
    np.testing.assert_allclose(product.coeffs, [1.0, 3.0, 5.0])
    jet = Jet.from_derivatives([1.0, 2.0, 6.0])
    np.testing.assert_allclose(jet.coeffs, [1.0, 2.0, 3.0])
    assert jet.derivative(2) == pytest.approx(6.0)
    np.testing.assert_allclose((Jet([0.0, 1.0, 0.0]) ** 2).coeffs, [0.0, 0.0, 1.0])
    np.testing.assert_allclose((2.0 - Jet([1.0, 1.0])).coeffs, [1.0, -1.0])


def test_jet_eval_runs_on_taylor_jets():
    g = [Jet([1.0, 1.0]), Jet([2.0, 0.0])]
    value = jet_eval(w(0) * w(1) + w(1), [], g, h=1.0, N=1)
    assert isinstance(value, Jet)
    np.testing.assert_allclose(value.coeffs, [4.0, 2.0])


def test_trig_function_derivatives():
    g = TrigFunction(TrigSpec.cosine(1))
    assert g(0.0) == pytest.approx(1.0)
    assert g.derivative(1, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert g.derivative(2, 0.0) == pytest.approx(-(2 * np.pi) ** 2)
    assert TrigFunction(TrigSpec.sine(1))(0.25) == pytest.approx(1.0)
    assert TrigFunction(TrigSpec.zero())(0.3) == 0


def test_trig_spec_rejects_duplicate_frequencies():
    with pytest.raises(ValidationError):
        TrigSpec(terms=[TrigTerm(m=1, re=1.0), TrigTerm(m=1, re=2.0)])


def test_lattice_validation():
    with pytest.raises(LatticeError):
        PeriodicLattice(np.zeros(4), np.array([1.0, 1.0, 0.0, 1.0]))
    with pytest.raises(LatticeError):
        PeriodicLattice(np.zeros(4), np.ones(3))


def test_constant_lattice_is_a_fixed_point():
    lat = PeriodicLattice.constant(8, -2.0, 1.0)
    dA, dB = lattice_flow_eval(toda_generator(1), lat)
    assert np.all(dA == 0) and np.all(dB == 0)
    end = integrate_flow(lat, toda_generator(2), 1.0, 10)
    np.testing.assert_allclose(end.A, lat.A)


def test_blowup_is_reported():
    # dA/dt = A² leaves every bounded set before t = 1
    pair = LatticePair(X(0) ** 2, LatticePoly.zero())
    lat = PeriodicLattice.constant(4, 1.0, 1.0)
    with pytest.raises(Blowup):
        integrate_flow(lat, pair, 5.0, 100)


def test_trace_invariants_of_a_constant_lattice():
    values = trace_invariants(PeriodicLattice.constant(5, 2.0, 3.0), 2)
    np.testing.assert_allclose(values, [10.0, 50.0])


def test_rk4_is_fourth_order():
    lat = random_lattice(8, np.random.default_rng(SEED), scale=0.5)
    ratio = rk4_error_ratio(lat, toda_generator(1), 0.5, 20)
    assert 12.0 < ratio < 20.0


def test_toda_flows_are_isospectral():
    lat = random_lattice(8, np.random.default_rng(SEED))
    rows = isospectral_drift({"T1": toda_generator(1), "T2": toda_generator(2)}, lat, 0.5, 500, 4)
    assert len(rows) == 8
    assert max(row.drift for row in rows) < 1e-8


def test_toda_flows_commute_numerically():
    lat = random_lattice(8, np.random.default_rng(SEED))
    defect = flow_commutator_defect(lat, toda_generator(1), toda_generator(2), 0.5, 100)
    assert defect < 1e-6


def test_shift_expansion_error_order():
    f = TrigFunction(TrigSpec.cosine(1))
    g = TrigFunction(TrigSpec.sine(1))
    errors, slope = shift_consistency_order(toda_generator(1), f, g, [1 / 16, 1 / 32, 1 / 64], N=3)
    assert errors[0] > errors[1] > errors[2]
    assert slope == pytest.approx(3.0, abs=0.3)


def test_slow_defect_improves_with_order(state5):
    g = TrigFunction(TrigSpec.cosine(1))
    results = slow_order_sweep(g, state5, orders=(2, 4))
    assert slopes_monotone(results)
    assert results[0].slope > 2.5
    assert results[1].slope > 4.5
    assert results[1].slope >= results[0].slope + 1.5


@pytest.mark.slow
def test_slow_slopes_at_order_six(state8):
    g = TrigFunction(TrigSpec.cosine(1))
    results = slow_order_sweep(g, state8, orders=(0, 2, 4, 6), h_list=(1 / 32, 1 / 64, 1 / 128))
    slopes = {r.order: r.slope for r in results}
    assert slopes_monotone(results)
    assert slopes[0] == pytest.approx(1.0, abs=0.2)
    assert slopes[6] >= 5
    assert slopes[6] >= slopes[2] + 3


def test_theta_b_identities():
    assert theta_B_identities() == {"forms_equal": True, "alpha_zero": True}


def test_theta_b_forms_agree():
    p = 1.3 + 0.2j
    value = theta_B(DegenerateThetaParams.from_angle(p, S, 0.1))
    assert np.isfinite(value)
    assert theta_B(DegenerateThetaParams.from_angle(p, S, 0.0)) == pytest.approx(1.0)


def test_theta_poles_raise():
    with pytest.raises(PoleHit):
        theta_H(1.0, 0.5)
    with pytest.raises(PoleHit):
        theta_B_v0(S, S * BETA, S)


@pytest.mark.parametrize("b", [1, 2, 3, -2])
def test_theta_h_limit(b):
    report = theta_H_limit(b, S, BETA)
    assert report.error < 1e-4
    assert len(report.h) == 4
    assert report.h[0] == pytest.approx(1e-2 / abs(b))


def test_theta_params_carry_only_the_closed_form_inputs():
    params = DegenerateThetaParams.from_angle(0.5, S, 0.25, b=2)
    assert params.beta == pytest.approx(1j)
    assert params.q == pytest.approx(2.0)
    with pytest.raises(TypeError):
        DegenerateThetaParams(p=0.5, s=S, x=S, t=1.0)


def test_theta_derivative_against_printed_value():
    assert theta_H_derivative_check(1, 2).agree
    report = theta_H_derivative_check(2, 2)
    assert not report.agree
    assert report.b_power == -2
    with pytest.raises(PoleHit):
        theta_H_derivative_check(0, 2)


def test_theta_samples_are_reproducible():
    rows = theta_samples(5, SEED)
    assert len(rows) == 5
    assert max(row.form_gap for row in rows) < 1e-10
    assert rows == theta_samples(5, SEED)
