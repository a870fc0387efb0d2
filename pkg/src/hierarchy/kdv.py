from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Optional

import structlog

from diffalg.diffpoly import W, DiffPoly, Generator, antiderivative, w
from diffalg.sparse import monomial_degree
from diffalg.errors import NotExact
from hierarchy.errors import RecursionBroken
from shared.workers import WorkerPool, map_ordered

logger = structlog.get_logger(__name__)

_TWO_THIRDS = Fraction(2, 3)
_ONE_THIRD = Fraction(1, 3)


@lru_cache(maxsize=None)
def kdv_generator(n: int) -> DiffPoly:
    """
    K_n of the KdV hierarchy normalized by K_1 = w^(3) + w^(0) w^(1).

    K_0 = w^(1) is the translation flow; then
    K_{n+1} = ∂²K_n + (2/3) w^(0) K_n + (1/3) w^(1) ∂^-1 K_n.

    Raises:
        RecursionBroken: some K_n is not a total derivative
    """
    if n < 0:
        raise ValueError(f"KdV flows are indexed from 0, got {n}")
    if n == 0:
        return w(1)
    prev = kdv_generator(n - 1)
    try:
        integral = antiderivative(prev)
    except NotExact as exc:
        raise RecursionBroken(n - 1, prev) from exc
    result = prev.partial_n(2) + w(0) * prev * _TWO_THIRDS + w(1) * integral * _ONE_THIRD
    logger.debug("KdV generator built", n=n, monomials=len(result))
    return result


def rescaled_kdv_generator(n: int, scale: Fraction = Fraction(1)) -> DiffPoly:
    """
    K_n(λw)/λ, the same flow in the normalization K_1 = w^(3) + λ w^(0) w^(1).

    A monomial of degree d picks up λ^(d-1); λ = 1 returns K_n itself.
    """
    scale = Fraction(scale)
    if scale == 0:
        raise ValueError("KdV scale must be nonzero")
    K = kdv_generator(n)
    if scale == 1:
        return K
    return DiffPoly({mono: c * scale ** (monomial_degree(mono) - 1) for mono, c in K.items()})


def fit_kdv_scale(leads: Iterable[DiffPoly]) -> Optional[Fraction]:
    """
    λ read off the first polynomial carrying both w^(3) and w^(0) w^(1).

    None when no polynomial has both terms.
    """
    w3 = w(3).sorted_terms()[0][0]
    w0w1 = (w(0) * w(1)).sorted_terms()[0][0]
    for lead in leads:
        a, b = lead.coefficient(w3), lead.coefficient(w0w1)
        if a and b:
            return Fraction(b) / Fraction(a)
    return None


def kdv_family(n: int, scale: Fraction = Fraction(1)) -> List[DiffPoly]:
    """[w^(1), K_1, ..., K_{n-1}]: the first n flows starting from translation, rescaled by λ."""
    return [rescaled_kdv_generator(i, scale) for i in range(n)]


def generate_kdv(ns: Iterable[int], pool: Optional[WorkerPool] = None) -> List[DiffPoly]:
    ns = list(ns)
    # the recursion is sequential; warm the cache up to the largest index first
    if ns:
        kdv_generator(max(ns))
    return map_ordered(kdv_generator, ns, pool)


def evolutionary_derive(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """D_p(q) for the ∂-commuting derivation of R_0 with D_p(w^(0)) = p."""
    total = DiffPoly.zero()
    image = p
    for j in range(q.max_order(W) + 1):
        if j:
            image = image.partial()
        coeff = q.diff(Generator(W, j))
        if coeff:
            total = total + coeff * image
    return total


def r0_bracket(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """D_p(q) - D_q(p), the Lie bracket of evolutionary flows on R_0."""
    return evolutionary_derive(p, q) - evolutionary_derive(q, p)
