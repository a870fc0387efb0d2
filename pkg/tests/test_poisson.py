import pytest

from poisson.algebra import BracketId, P1Algebra, P2Algebra, make_algebra
from poisson.checks import (
    casimir_check,
    fourier_identity_check,
    hamiltonian_check,
    jacobi_check,
    printed_form_holds,
    rows_to_tsv,
    run_suites,
)
from poisson.cyclotomic import CyclotomicRing

SEED = 20240517


def test_cyclotomic_ring():
    ring = CyclotomicRing(5)
    assert ring.degree == 4
    assert ring.zeta(5) == ring.scalar(1)
    assert ring.zeta(-1) * ring.zeta(1) == ring.scalar(1)
    total = ring.scalar(0)
    for k in range(5):
        total = total + ring.zeta(k)
    assert not total


def test_generator_tables():
    p2 = P2Algebra(5)
    assert p2.bracket(p2.A(0), p2.A(1)) == p2.B(0)
    assert p2.bracket(p2.B(0), p2.A(0)) == -(p2.B(0) * p2.A(0))
    p1 = P1Algebra(5)
    assert p1.bracket(p1.A(0), p1.B(0)) == p1.B(0).scale(2)
    assert p1.bracket(p1.A(1), p1.B(0)) == p1.B(0).scale(-2)
    assert p1.bracket(p1.A(0), p1.A(1)).is_zero()
    with pytest.raises(ValueError):
        make_algebra(2, BracketId.P1)


@pytest.mark.parametrize("bracket_id", list(BracketId))
def test_jacobi_identity(bracket_id):
    rows = jacobi_check(bracket_id, 4, trials=5, seed=SEED)
    assert rows and all(row.holds for row in rows)


def test_product_of_b_is_a_casimir():
    rows = casimir_check(4)
    assert all(row.ok for row in rows)
    literal = [row for row in rows if row.case.startswith("literal")]
    assert len(literal) == 1 and not literal[0].holds
    assert literal[0].witness


def test_linear_bracket_fourier_sign():
    rows = fourier_identity_check(1, 2, 5)
    assert all(row.ok for row in rows)
    assert not printed_form_holds(rows)
    assert printed_form_holds(fourier_identity_check(0, 2, 5))


def test_first_toda_flow_is_hamiltonian():
    rows = hamiltonian_check(4)
    assert all(row.ok for row in rows)
    assert [row.holds for row in rows] == [True, True, False]


def test_run_suites():
    rows = run_suites(4, suites=("casimir", "hamiltonian"), seed=SEED)
    assert rows and all(row.ok for row in rows)
    only_p1 = run_suites(4, brackets=[BracketId.P1], suites=("hamiltonian",))
    assert {row.bracket for row in only_p1} == {"p1"}
    assert rows_to_tsv(rows).splitlines()[0] == "suite\tbracket\tcase\tholds\texpected\tstatus"
    with pytest.raises(ValueError):
        run_suites(4, suites=("spectral",))
