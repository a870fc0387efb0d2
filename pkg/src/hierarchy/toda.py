from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence

import structlog

from diffalg.derivation import TameDerivation, conjugate
from diffalg.diffpoly import DiffPoly, v, w
from diffalg.series import EpsSeries, exp_shift
from hierarchy.errors import LeadingTermMismatch
from hierarchy.lattice import (
    X_AXIS,
    LatticeGen,
    LatticePair,
    LatticePoly,
    lax_matrix,
)
from shared.workers import WorkerPool, map_ordered

logger = structlog.get_logger(__name__)

# ψ = T_2 + 2 T_1, the flow that vanishes on the degenerate point A = -2, B = 1
SLOW_COMBINATION = ((2, 1), (1, 2))
SLOW_LABEL = "T2+2T1"


def _image(pair: LatticePair, gen: LatticeGen) -> LatticePoly:
    base = pair.p1 if gen.axis == X_AXIS else pair.p2
    return base.shift(gen.offset)


def lattice_derive(pair: LatticePair, target: LatticePoly) -> LatticePoly:
    """Apply the shift-equivariant derivation X_n -> P1[n], Y_n -> P2[n] to target."""
    total = LatticePoly.zero()
    for gen in target.generators():
        total = total + target.diff(gen) * _image(pair, gen)
    return total


def lattice_bracket(a: LatticePair, b: LatticePair) -> LatticePair:
    """The pair of [D_a, D_b], read off on X_0 and Y_0."""
    return LatticePair(
        lattice_derive(a, b.p1) - lattice_derive(b, a.p1),
        lattice_derive(a, b.p2) - lattice_derive(b, a.p2),
    )


@lru_cache(maxsize=None)
def toda_generator(k: int) -> LatticePair:
    """
    T_k = -(diagonal, superdiagonal) of [(C^k)^+, C] at row 0.

    The sign makes T_1 = (Y_-1 - Y_0, Y_0 (X_0 - X_1)).
    """
    if k < 1:
        raise ValueError(f"Toda flows are indexed from 1, got {k}")
    C = lax_matrix()
    upper = C.power(k).strict_upper()
    pair = -upper.commutator(C).readout()
    logger.debug("Toda generator built", k=k, offsets=pair.offsets())
    return pair


def toda_combination(combination: Iterable[Sequence[int]]) -> LatticePair:
    """Σ c·T_k over (k, c) pairs."""
    total = LatticePair.zero()
    for k, c in combination:
        total = total + toda_generator(k).scale(c)
    return total


def generate_toda(ks: Iterable[int], pool: Optional[WorkerPool] = None) -> List[LatticePair]:
    return map_ordered(toda_generator, ks, pool)


def toda_to_eps(pair: LatticePair, trunc: int) -> TameDerivation:
    """
    The tame derivation with D(v^(0)) = P1(X_j -> E_j v^(0), Y_j -> E_j w^(0)).

    Args:
        pair: lattice pair
        trunc: number of ε-orders kept (>= 1)

    Returns:
        TameDerivation known modulo ε^trunc
    """
    if trunc < 1:
        raise ValueError("toda_to_eps needs trunc >= 1")
    shifts = {}

    def assign(gen: LatticeGen) -> EpsSeries:
        value = shifts.get(gen)
        if value is None:
            base = v(0) if gen.axis == X_AXIS else w(0)
            value = exp_shift(gen.offset, base, trunc)
            shifts[gen] = value
        return value

    img_v = pair.p1.evaluate(assign, zero=EpsSeries.zero(trunc))
    img_w = pair.p2.evaluate(assign, zero=EpsSeries.zero(trunc))
    return TameDerivation(_as_eps(img_v, trunc), _as_eps(img_w, trunc))


def _as_eps(value, trunc: int) -> EpsSeries:
    if isinstance(value, EpsSeries):
        return value
    return EpsSeries.from_poly(DiffPoly.constant(value), trunc)


def flow_generator(k: int, trunc: int) -> TameDerivation:
    """
    ε^-1 · conjugate(toda_to_eps(T_k)), known modulo ε^trunc.

    Every conjugated Toda flow vanishes modulo ε because constant lattices
    are fixed points, so the division is exact.
    """
    raw = conjugate(toda_to_eps(toda_generator(k), trunc + 3))
    return raw.div_eps(1)


def _raw_slow(trunc: int) -> TameDerivation:
    pair = toda_combination(SLOW_COMBINATION)
    return conjugate(toda_to_eps(pair, trunc + 3)).div_eps(1)


def _scale_for(lead: DiffPoly, expected: DiffPoly, component: str) -> Fraction:
    mono, target = expected.sorted_terms()[0]
    actual = lead.coefficient(mono)
    if not actual:
        raise LeadingTermMismatch(component, expected, lead)
    factor = Fraction(target) / Fraction(actual)
    if lead.scale(factor) != expected:
        raise LeadingTermMismatch(component, expected, lead)
    return factor


@lru_cache(maxsize=None)
def slow_scale() -> Fraction:
    """
    Scalar turning ε^-1 Φ(T_2 + 2T_1) into the normalized slow flow.

    Read off the ε^0 images, which must be rational multiples of v^(1) - w^(1)
    and w^(1) - v^(1) with the same factor.
    """
    raw = _raw_slow(1)
    scale_v = _scale_for(raw.img_v.coefficient(0), v(1) - w(1), "v0")
    scale_w = _scale_for(raw.img_w.coefficient(0), w(1) - v(1), "w0")
    if scale_v != scale_w:
        raise LeadingTermMismatch("w0", scale_v, scale_w)
    logger.info("Slow flow normalization read off", slow_scale=str(scale_v))
    return scale_v


def slow_generator(trunc: int, scale: Optional[Fraction] = None) -> TameDerivation:
    """
    The defining flow D_1: slow_scale · ε^-1 · conjugate(toda_to_eps(T_2 + 2T_1)).

    Its images are v^(1) - w^(1) and w^(1) - v^(1) modulo ε.
    """
    if trunc < 2:
        raise ValueError("slow_generator needs trunc >= 2")
    factor = slow_scale() if scale is None else Fraction(scale)
    return _raw_slow(trunc).scale(factor)
