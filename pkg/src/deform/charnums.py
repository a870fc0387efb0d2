from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import structlog
from pydantic import BaseModel, Field

from deform.errors import TruncationTooShallow
from deform.induced import InducedDerivation
from deform.linalg import change_of_basis, solve_combination, span_equal
from diffalg import codec
from diffalg.diffpoly import DiffPoly
from diffalg.series import EpsSeries
from hierarchy.kdv import fit_kdv_scale, kdv_family

logger = structlog.get_logger(__name__)

DEFAULT_PIVOT_OFFSET = 1


class NormalizedBasisReport(BaseModel):
    """ε-adic normal form of a family of induced flows"""
    pivots: List[int] = Field(..., description="Characteristic numbers (valuation + pivot offset)")
    valuations: List[int] = Field(..., description="ε-valuations of the normalized images")
    leading_terms: List[str] = Field(..., description="Leading coefficients E_k^[0]")
    sources: List[str] = Field(..., description="Flow each pivot was taken from")
    reference: List[str] = Field(..., description="KdV flows the span is compared against")
    kdv_scale: str = Field("1/1", description="λ of the reference normalization K_1 = w^(3) + λ w^(0) w^(1)")
    span_equal: bool
    change_of_basis: List[List[str]] = Field(
        default_factory=list,
        description="Rows expressing each leading term in the reference flows"
    )


@dataclass
class _Pivot:
    valuation: int
    lead: DiffPoly
    element: EpsSeries
    source: str


def _reduce(x: EpsSeries, pivots: Sequence[_Pivot], trunc: int, source: str) -> EpsSeries:
    """Strip every leading term that is a rational combination of pivot leads of lower or equal valuation."""
    while True:
        if x.is_zero():
            raise TruncationTooShallow(trunc + 1, trunc)
        val = x.min_exp
        usable = [p for p in pivots if p.valuation <= val]
        coeffs = solve_combination([p.lead for p in usable], x.leading()) if usable else None
        if coeffs is None:
            return x
        for c, p in zip(coeffs, usable):
            if c:
                x = x - p.element.shift(val - p.valuation).scale(c)
        x = x.truncate(trunc)
        logger.debug("Leading term eliminated", flow=source, valuation=val)


def characteristic_numbers(
    flows: Sequence[InducedDerivation],
    N: int,
    pivot_offset: int = DEFAULT_PIVOT_OFFSET,
    reference: Optional[Sequence[DiffPoly]] = None,
) -> NormalizedBasisReport:
    """
    ε-adic elimination on the images D̄_k(w^(0)).

    Repeatedly reduce the remaining images against the pivots found so far
    and promote the one of least valuation. Leading terms are compared by
    span against `reference`. The default is the first len(flows) KdV flows,
    starting from translation, in the normalization λ fitted from the leads
    (K_1 = w^(3) + λ w^(0) w^(1)).

    Raises:
        TruncationTooShallow: N <= 2·len(flows), or an image vanishes mod ε^N
    """
    n = len(flows)
    if N <= 2 * n:
        raise TruncationTooShallow(2 * n + 1, N)
    if min(f.trunc for f in flows) < N:
        raise TruncationTooShallow(N, min(f.trunc for f in flows))

    pending = [(f.img_w.truncate(N), f.source) for f in flows]
    pivots: List[_Pivot] = []
    while pending:
        reduced = [(_reduce(x, pivots, N, src), src) for x, src in pending]
        best = min(range(len(reduced)), key=lambda i: reduced[i][0].min_exp)
        x, src = reduced.pop(best)
        pivots.append(_Pivot(x.min_exp, x.leading(), x, src))
        logger.info("Pivot found", flow=src, valuation=x.min_exp, lead=str(x.leading()))
        pending = reduced

    leads = [p.lead for p in pivots]
    scale = Fraction(1)
    if reference is None:
        scale = fit_kdv_scale(leads) or Fraction(1)
        logger.info("KdV scale fitted", scale=str(scale))
        reference = kdv_family(n, scale)
    reference = list(reference)
    equal = span_equal(leads, reference)
    rows = change_of_basis(leads, reference) if equal else []
    return NormalizedBasisReport(
        pivots=[p.valuation + pivot_offset for p in pivots],
        valuations=[p.valuation for p in pivots],
        leading_terms=[str(lead) for lead in leads],
        sources=[p.source for p in pivots],
        reference=[str(r) for r in reference],
        kdv_scale=codec.encode_fraction(scale),
        span_equal=equal,
        change_of_basis=[[codec.encode_fraction(c) for c in row] for row in rows],
    )
