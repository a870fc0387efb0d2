from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, Field

from deform.errors import OrderNotReached
from deform.state import DeformationState
from diffalg.diffpoly import W, Generator
from diffalg.jets import jet_eval
from diffalg.series import EpsSeries
from hierarchy.lattice import X_AXIS, LatticeGen, LatticePair, LatticePoly, X, Y, lconst
from hierarchy.toda import SLOW_COMBINATION, toda_combination
from numlab.lattice import fit_slope
from numlab.taylor import Jet
from numlab.trig import TrigFunction
from shared.workers import WorkerPool, map_ordered

logger = structlog.get_logger(__name__)

DEFAULT_H_LIST = (1 / 32, 1 / 64, 1 / 128)
DEFAULT_ORDERS = (2, 4, 6)


class SlowOrderResult(BaseModel):
    """Tangency defect of the slow lattice field at one truncation of Q"""
    order: int = Field(..., description="Q is truncated to Q_0 .. Q_order")
    h: List[float]
    defect: List[float] = Field(..., description="max over the grid of |defect| per h")
    slope: Optional[float] = Field(None, description="Fitted exponent; None when the defect vanishes")


def _centered(poly: LatticePoly) -> LatticePoly:
    """poly with X_j -> -2 + X_j, Y_j -> 1 + Y_j."""
    def assign(gen: LatticeGen) -> LatticePoly:
        if gen.axis == X_AXIS:
            return lconst(-2) + X(gen.offset)
        return lconst(1) + Y(gen.offset)

    return poly.evaluate(assign, zero=LatticePoly.zero())


@lru_cache(maxsize=None)
def centered_slow_pair() -> LatticePair:
    """T_2 + 2T_1 written around the degenerate point A = -2, B = 1."""
    pair = toda_combination(SLOW_COMBINATION)
    return LatticePair(_centered(pair.p1), _centered(pair.p2))


def _tangency_defect(
    pair: LatticePair,
    Q: EpsSeries,
    dQ: Dict[int, EpsSeries],
    g: TrigFunction,
    h: float,
    n_terms: int,
    depth: int,
) -> float:
    npoints = int(round(1 / h))
    xs = np.arange(npoints) * h
    length = max(dQ) + 1 if dQ else 1

    offsets = sorted({
        gen.offset
        for poly in (pair.p1, pair.p2)
        for mono in poly.terms
        for gen, _ in mono
    })
    jets_x: Dict[int, Jet] = {}
    jets_y: Dict[int, Jet] = {}
    for j in offsets:
        g_jets = g.taylor_jets(xs + j * h, depth + 1, length)
        f_jet = jet_eval(Q, [], g_jets, h, n_terms)
        jets_x[j] = h * h * f_jet
        jets_y[j] = h * h * g_jets[0]

    def assign(gen: LatticeGen) -> Jet:
        return jets_x[gen.offset] if gen.axis == X_AXIS else jets_y[gen.offset]

    zero = Jet.constant(0.0, length, (npoints,))
    psi_a = pair.p1.evaluate(assign, zero=zero, coeff=float)
    psi_b = pair.p2.evaluate(assign, zero=zero, coeff=float)
    g_dot = psi_b / (h * h)

    g_vals = g.jets(xs, depth + 1)
    tangent = np.zeros(npoints, dtype=np.complex128)
    for j, series in dQ.items():
        weight = jet_eval(series, [], g_vals, h, n_terms)
        tangent = tangent + weight * g_dot.derivative(j)
    defect = (psi_a.value - h * h * tangent) / h ** 3
    return float(np.abs(defect).max())


def slow_order_test(
    g: TrigFunction,
    state: DeformationState,
    h_list: Sequence[float] = DEFAULT_H_LIST,
    order: Optional[int] = None,
) -> SlowOrderResult:
    """
    Measure how fast the slow lattice field leaves the constraint manifold
    A = -2 + h²·Q(g), B = 1 + h²g as h -> 0.

    Q is truncated to Q_0 .. Q_order and evaluated at ε = h with exact jets
    of g. The defect is the A-component of the field minus the A-velocity
    forced by the B-velocity through the constraint, divided by h³. Every
    derivative is taken on Taylor jets, so no finite differences enter.

    Args:
        g: periodic test function, sampled on the grid x = k·h
        state: deformation state with state.order > order
        h_list: lattice spacings, each the reciprocal of an integer
        order: truncation of Q (default state.order - 1)

    Returns:
        SlowOrderResult with the fitted exponent of max|defect| against h
    """
    order = state.order - 1 if order is None else order
    if order < 0 or order >= state.order:
        raise OrderNotReached(order + 1, state.order)
    n_terms = order + 1
    Q = state.Q.truncate(n_terms)
    max_w = max(Q.coefficient(n).max_order() for n in range(n_terms))
    dQ = {}
    for j in range(max_w + 1):
        gen = Generator(W, j)
        series = Q.map(lambda c, gen=gen: c.diff(gen))
        if not series.is_zero():
            dQ[j] = series
    pair = centered_slow_pair()

    defects = []
    for h in h_list:
        value = _tangency_defect(pair, Q, dQ, g, h, n_terms, max_w)
        logger.info("Slow defect measured", order=order, h=h, defect=value)
        defects.append(value)
    slope = fit_slope(h_list, defects)
    return SlowOrderResult(order=order, h=list(h_list), defect=defects, slope=slope)


def slow_order_sweep(
    g: TrigFunction,
    state: DeformationState,
    orders: Sequence[int] = DEFAULT_ORDERS,
    h_list: Sequence[float] = DEFAULT_H_LIST,
    pool: Optional[WorkerPool] = None,
) -> List[SlowOrderResult]:
    return map_ordered(lambda k: slow_order_test(g, state, h_list, k), orders, pool)


def slopes_monotone(results: Sequence[SlowOrderResult]) -> bool:
    slopes = [r.slope for r in sorted(results, key=lambda r: r.order)]
    if any(s is None for s in slopes):
        return False
    return all(a < b for a, b in zip(slopes, slopes[1:]))
