from fractions import Fraction

import pytest

from diffalg import codec
from diffalg.derivation import TameDerivation, conjugate, derive, phi, phi_inv, substitute_sigma
from diffalg.diffpoly import (
    DiffPoly,
    Inhomogeneous,
    WeightProfile,
    antiderivative,
    combined_weight,
    is_exact,
    v,
    var_derivative,
    w,
    weight_profile,
)
from diffalg.errors import IrrationalConstant, JetTooShort, NotDivisible, NotExact, NotTame, TruncationMismatch
from diffalg.jets import jet_eval
from diffalg.series import EpsSeries, exp_shift

HALF = Fraction(1, 2)


def test_partial_follows_leibniz():
    """∂(w0²) = 2 w0 w1 and ∂ raises every order by one"""
    assert (w(0) ** 2).partial() == w(0) * w(1) * 2
    assert (v(0) * w(2)).partial() == v(1) * w(2) + v(0) * w(3)


def test_variational_derivative_kills_total_derivatives():
    for p in (w(0) ** 3, w(0) * w(2), w(1) ** 2 * w(0)):
        assert var_derivative(p.partial()).is_zero()
        assert is_exact(p.partial())


def test_variational_derivative_of_nonexact():
    # δ(w0 w1²) = w1² - 2∂(w0 w1) = -w1² - 2 w0 w2
    assert var_derivative(w(0) * w(1) ** 2) == -(w(1) ** 2) - w(0) * w(2) * 2


def test_antiderivative_inverts_partial():
    for p in (w(0) ** 2 * HALF, w(0) * w(2), w(1) ** 2 * w(0) + w(3)):
        integral = antiderivative(p.partial())
        assert integral.partial() == p.partial()
        assert integral.constant_term() == 0


def test_antiderivative_rejects_nonexact():
    with pytest.raises(NotExact):
        antiderivative(w(0))
    with pytest.raises(NotExact):
        antiderivative(w(0) * w(1) ** 2)


def test_var_derivative_needs_w_only():
    with pytest.raises(ValueError):
        var_derivative(v(0) * w(1))


def test_combined_weight():
    assert combined_weight(w(1)) == 3
    assert combined_weight(w(0) ** 2 + w(2)) == 4
    assert combined_weight(w(0) + w(1)) is None


def test_weight_profile():
    assert weight_profile(v(1) * w(0) ** 2) == WeightProfile(amp_v=1, amp_w=2, diff=1)
    assert weight_profile(DiffPoly.zero()) == WeightProfile(0, 0, 0)
    mixed = weight_profile(w(0) + v(2))
    assert isinstance(mixed, Inhomogeneous)
    assert len(mixed.profiles) == 2


def test_float_coefficients_are_rejected():
    with pytest.raises(IrrationalConstant):
        w(0) + 0.5


def test_series_arithmetic_and_truncation():
    a = EpsSeries([w(0), w(1)], trunc=3)
    b = EpsSeries([DiffPoly.constant(1), w(0)], trunc=3)
    prod = a * b
    assert prod.trunc == 3
    assert prod.coefficient(0) == w(0)
    assert prod.coefficient(1) == w(1) + w(0) ** 2
    assert prod.coefficient(2) == w(0) * w(1)
    with pytest.raises(TruncationMismatch):
        prod.coefficient(3)
    assert prod.equal_mod(prod + EpsSeries.monomial(w(2), 2, 3), 2)
    assert not prod.equal_mod(prod + EpsSeries.monomial(w(2), 2, 3), 3)


def test_series_zero_and_valuation():
    s = EpsSeries([DiffPoly.zero(), DiffPoly.zero(), w(2)], trunc=4)
    assert s.min_exp == 2
    assert s.leading() == w(2)
    assert EpsSeries.zero(5).is_zero()
    with pytest.raises(NotDivisible):
        s.div_eps(3)


def test_exp_shift_is_taylor_expansion():
    s = exp_shift(2, w(0), 4)
    assert s.coefficient(0) == w(0)
    assert s.coefficient(1) == w(1) * 2
    assert s.coefficient(2) == w(2) * 2
    assert s.coefficient(3) == w(3) * Fraction(8, 6)


def test_translation_derivation():
    D = TameDerivation.translation(3)
    assert derive(D, w(0) ** 2) == EpsSeries.from_poly(w(0) * w(1) * 2, 3)


def test_phi_shifts_the_constant_point():
    image = phi(w(0), trunc=5)
    assert image.coefficient(0) == DiffPoly.constant(1)
    assert image.coefficient(2) == w(0)
    image = phi(v(0) * w(1), trunc=7)
    assert image.coefficient(2) == w(1) * -2
    assert image.coefficient(4) == v(0) * w(1)


def test_phi_inv_undoes_phi():
    p = v(0) * w(1) + w(0) ** 2
    back = phi_inv(phi(p, trunc=20), tail_degree=2)
    assert back.trunc == 16
    assert back.coefficient(0) == p
    assert back.min_exp == 0 and back.max_exp == 0


def test_phi_inv_of_a_series_is_known_below_the_tail():
    s = EpsSeries([w(0), v(1), w(0) * v(0), w(2) * w(1)], trunc=10)
    image = phi(s)
    assert image.trunc == 10
    back = phi_inv(image, tail_degree=2)
    assert back.trunc == 6
    assert back.equal_mod(s, 6)
    assert phi_inv(image, tail_degree=1).trunc == 8


def test_phi_inv_needs_the_tail_degree_of_a_series():
    with pytest.raises(ValueError):
        phi_inv(phi(w(0), trunc=6))
    with pytest.raises(ValueError):
        phi_inv(phi(w(0), trunc=6), tail_degree=-1)


def test_conjugate_rejects_nontame():
    D = TameDerivation(EpsSeries.from_poly(v(0), 4), EpsSeries.zero(4))
    with pytest.raises(NotTame):
        conjugate(D)


def test_substitute_sigma_replaces_v():
    Q = EpsSeries([w(0), w(1)], trunc=3)
    out = substitute_sigma(Q, EpsSeries.from_poly(v(1) * w(0), 3))
    assert out.coefficient(0) == w(1) * w(0)
    assert out.coefficient(1) == w(2) * w(0)


def test_jet_eval():
    series = EpsSeries([w(0) * w(1), v(0)], trunc=2)
    value = jet_eval(series, [5.0], [2.0, 3.0], h=0.1, N=2)
    assert value == pytest.approx(6.0 + 0.5)
    with pytest.raises(JetTooShort):
        jet_eval(w(2), [], [1.0, 1.0], h=0.1, N=1)


def test_codec_is_canonical():
    a = w(0) * w(1) * HALF + w(3)
    b = w(3) + w(1) * w(0) * HALF
    assert codec.dumps(codec.encode_poly(a)) == codec.dumps(codec.encode_poly(b))
    assert codec.content_hash(codec.encode_poly(a)) == codec.content_hash(codec.encode_poly(b))
    assert codec.encode_fraction(Fraction(-3, 6)) == "-1/2"
    assert codec.decode_poly(codec.encode_poly(a)) == a


def test_derivation_codec_round_trip():
    D = TameDerivation.translation(3)
    D = TameDerivation(D.img_v + EpsSeries.monomial(w(0) ** 2 * HALF, 2, 3), D.img_w)
    data = codec.encode_derivation(D)
    assert codec.decode_derivation(data) == D
    assert codec.dumps(data) == codec.dumps(codec.encode_derivation(codec.decode_derivation(data)))
