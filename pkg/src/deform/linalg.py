from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import sympy

from diffalg.diffpoly import DiffPoly
from diffalg.sparse import Monomial, monomial_key


def _rational(value: Fraction) -> sympy.Rational:
    value = Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


def _fraction(value) -> Fraction:
    value = sympy.nsimplify(value) if not isinstance(value, sympy.Rational) else value
    return Fraction(int(value.p), int(value.q))


def coordinates(polys: Sequence[DiffPoly]) -> Tuple[List[Monomial], sympy.Matrix]:
    """Monomial basis and the matrix whose columns are the coordinates of polys."""
    monomials = sorted({m for p in polys for m in p.terms}, key=monomial_key)
    index = {m: i for i, m in enumerate(monomials)}
    matrix = sympy.zeros(len(monomials), len(polys))
    for j, p in enumerate(polys):
        for m, c in p.items():
            matrix[index[m], j] = _rational(c)
    return monomials, matrix


def rank(polys: Sequence[DiffPoly]) -> int:
    if not polys:
        return 0
    _, matrix = coordinates(polys)
    return matrix.rank()


def solve_combination(
    basis: Sequence[DiffPoly], target: DiffPoly
) -> Optional[List[Fraction]]:
    """Rational c with Σ c_j basis_j = target, or None when target is outside the span."""
    if not target:
        return [Fraction(0)] * len(basis)
    if not basis:
        return None
    _, matrix = coordinates(list(basis) + [target])
    A = matrix[:, : len(basis)]
    b = matrix[:, len(basis)]
    try:
        solution, params = A.gauss_jordan_solve(b)
    except ValueError:
        return None
    if params.shape[0]:
        solution = solution.subs({p: 0 for p in params})
    return [_fraction(x) for x in solution]


def span_equal(a: Sequence[DiffPoly], b: Sequence[DiffPoly]) -> bool:
    """Equality of the ℚ-spans, by rank."""
    ra, rb = rank(a), rank(b)
    return ra == rb == rank(list(a) + list(b))


def change_of_basis(a: Sequence[DiffPoly], b: Sequence[DiffPoly]) -> List[List[Fraction]]:
    """Rows M_i with a_i = Σ_j M_ij b_j; raises ValueError if some a_i is outside span(b)."""
    rows = []
    for p in a:
        coeffs = solve_combination(b, p)
        if coeffs is None:
            raise ValueError(f"{p} is outside the span")
        rows.append(coeffs)
    return rows
