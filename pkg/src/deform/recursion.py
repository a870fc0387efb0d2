import time
from dataclasses import replace
from fractions import Fraction
from typing import Optional, Union

import structlog

from deform.errors import CorrectionFailed, ObstructionNotExact, OrderNotReached
from deform.state import DeformationState, GaugeRecord, ObstructionRecord, initial_state
from diffalg import codec
from diffalg.derivation import TameDerivation, derive, substitute_sigma
from diffalg.diffpoly import DiffPoly, antiderivative, combined_weight, v, var_derivative
from diffalg.series import EpsSeries
from hierarchy.toda import flow_generator, slow_generator

logger = structlog.get_logger(__name__)

FlowSpec = Union[str, int]
SLOW = "slow"


def flow_label(k: FlowSpec) -> str:
    return SLOW if k == SLOW else f"T{int(k)}"


def flow_derivation(k: FlowSpec, trunc: int, gauge: GaugeRecord) -> TameDerivation:
    """The slow defining flow (gauge-normalized) or the ε-normalized Toda flow T_k."""
    if k == SLOW:
        return slow_generator(trunc, scale=gauge.flow_factor)
    k = int(k)
    if k < 1:
        raise ValueError(f"flow index must be positive, got {k}")
    return flow_generator(k, trunc)


def ideal_residual(D: TameDerivation, Q: EpsSeries, trunc: int) -> EpsSeries:
    """σ_Q(D(v^(0) - Q)) modulo ε^trunc."""
    D = D.truncate(trunc)
    Q = Q.truncate(trunc).extend(trunc)
    generator = EpsSeries.from_poly(v(0), trunc) - Q
    return substitute_sigma(Q, derive(D, generator)).truncate(trunc)


def residual(
    state: DeformationState,
    k: FlowSpec,
    N: int,
    flow: Optional[TameDerivation] = None,
) -> EpsSeries:
    """
    σ_Q(D_k(v^(0) - Q)) modulo ε^N; zero iff D_k preserves the ideal of v^(0) - Q mod ε^N.

    Raises:
        OrderNotReached: the state is known to a lower order than N
    """
    if state.order < N:
        raise OrderNotReached(N, state.order)
    D = flow if flow is not None else flow_derivation(k, N, state.gauge)
    return ideal_residual(D, state.Q, N)


def _first_nonzero(series: EpsSeries) -> int:
    return series.min_exp


def _freeze_constant(
    state: DeformationState, D: TameDerivation, integral: DiffPoly, n: int
) -> Fraction:
    """Try each candidate c once and keep the unique one that kills the ε^n residual."""
    working = []
    for text in state.gauge.recursion_candidates:
        c = Fraction(text)
        trial = state.Q + EpsSeries.monomial(integral.scale(c), n, n + 1)
        rho = ideal_residual(D, trial, n + 1)
        if rho.is_zero():
            working.append(c)
        logger.debug("Recursion constant tried", order=n, c=text, works=rho.is_zero())
    if len(working) != 1:
        raise CorrectionFailed(n, f"{len(working)} candidate constants annihilate the residual")
    logger.info("Recursion constant frozen", order=n, c=str(working[0]))
    return working[0]


def extend_order(
    state: DeformationState, flow: Optional[TameDerivation] = None
) -> DeformationState:
    """
    One step of the recursion: order n -> n + 1.

    The ε^n coefficient of the residual is 2∂Q_n + G_n with G_n depending on
    Q_0..Q_{n-1} only, so Q_n = c·∂^-1 G_n with c frozen once.

    Raises:
        ObstructionNotExact: δ(G_n) != 0
        CorrectionFailed: the residual survives the update
    """
    n = state.order
    trunc = n + 1
    D = flow.truncate(trunc) if flow is not None else flow_derivation(SLOW, trunc, state.gauge)

    rho = ideal_residual(D, state.Q, trunc)
    if not rho.truncate(n).is_zero():
        raise CorrectionFailed(_first_nonzero(rho), str(rho.leading()))
    obstruction = rho.coefficient(n)

    delta = var_derivative(obstruction)
    if delta:
        logger.error(
            "Obstruction not exact",
            order=n,
            obstruction=str(obstruction),
            variational_derivative=str(delta),
        )
        raise ObstructionNotExact(n, obstruction)

    integral = antiderivative(obstruction)
    gauge = state.gauge
    c = gauge.constant
    if integral and c is None:
        c = _freeze_constant(state, D, integral, n)
        gauge = gauge.model_copy(update={"recursion_constant": codec.encode_fraction(c)})

    correction = integral.scale(c) if integral else DiffPoly.zero()
    Q = state.Q + EpsSeries.monomial(correction, n, n + 1)
    check = ideal_residual(D, Q, trunc)
    if not check.is_zero():
        raise CorrectionFailed(_first_nonzero(check), str(check.leading()))

    q_n = Q.coefficient(n)
    record = ObstructionRecord(
        order=n,
        obstruction=str(obstruction),
        exact=True,
        correction=str(q_n),
        monomials=len(q_n),
        weight=combined_weight(q_n) if q_n else None,
    )
    return replace(
        state,
        Q=Q.extend(n + 2),
        order=n + 1,
        gauge=gauge,
        log=state.log + (record,),
    )


def deform_to(
    order: int,
    gauge: Optional[GaugeRecord] = None,
    cache=None,
    state: Optional[DeformationState] = None,
) -> DeformationState:
    """
    Drive extend_order until the residual vanishes modulo ε^order.

    Args:
        order: target order
        gauge: gauge record (default conventions when None)
        cache: optional deform.cache.StateCache to resume from and save into
        state: optional starting state, overrides the cache

    Returns:
        The state at exactly `order`
    """
    gauge = (gauge or GaugeRecord()).resolved()
    if state is None and cache is not None:
        state = cache.load(gauge, order)
    if state is None:
        state = initial_state(gauge)
    if state.order > order:
        return state.truncated_to(order)

    start = state.order
    flow = flow_derivation(SLOW, order + 1, state.gauge) if order > start else None
    started = time.perf_counter()
    while state.order < order:
        step_started = time.perf_counter()
        state = extend_order(state, flow=flow)
        record = state.log[-1]
        logger.info(
            "Order extended",
            order=state.order,
            monomials=record.monomials,
            weight=record.weight,
            seconds=round(time.perf_counter() - step_started, 3),
        )
        if cache is not None:
            cache.save(state)
    if order > start:
        logger.info(
            "Deformation complete",
            order=order,
            resumed_from=start,
            seconds=round(time.perf_counter() - started, 3),
        )
    return state
