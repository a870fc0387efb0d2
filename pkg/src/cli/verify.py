from fractions import Fraction
from itertools import combinations
from typing import List, Optional

import numpy as np
import structlog
from pydantic import BaseModel, Field

from deform.bounds import DEFAULT_TOLERANCE, PRINTED_BOUNDS, bounds_table, reconcile_bounds
from deform.charnums import characteristic_numbers
from deform.induced import commute_check, induce_many
from deform.recursion import flow_label, residual
from deform.state import DeformationState
from diffalg.diffpoly import v, w
from hierarchy.kdv import kdv_generator, r0_bracket
from hierarchy.lattice import LatticePair, X, Y
from hierarchy.toda import SLOW_COMBINATION, lattice_bracket, slow_generator, toda_combination, toda_generator
from numlab.lattice import flow_commutator_defect, isospectral_drift, random_lattice
from numlab.slow import DEFAULT_H_LIST, slow_order_sweep, slopes_monotone
from numlab.theta import theta_B_identities, theta_H_limit
from numlab.trig import TrigFunction, TrigSpec
from poisson.checks import run_suites
from shared.errors import CheckFailed
from shared.workers import WorkerPool, map_ordered

logger = structlog.get_logger(__name__)

GROUPS = ("lattice", "kdv", "commute", "charnums", "bounds", "numlab", "poisson")

ISO_TOLERANCE = 1e-8
FLOW_COMMUTE_TOLERANCE = 1e-6
LIMIT_RTOL = 1e-4
FULL_ORDER = 8
FAST_ORDER = 4
# ε-order of the deformation each group needs, (fast, full)
STATE_ORDERS = {
    "commute": (FAST_ORDER, FULL_ORDER),
    "charnums": (5, FULL_ORDER),
    "bounds": (6, FULL_ORDER),
    "numlab": (5, FULL_ORDER),
}
THETA_S = 0.35 + 0.2j
THETA_BETA = 1j
POISSON_N = 5


def state_order(group: str, fast: bool) -> int:
    fast_order, full_order = STATE_ORDERS[group]
    return fast_order if fast else full_order


class VerifyRow(BaseModel):
    group: str
    check: str
    holds: bool
    numeric: bool = False
    detail: str = Field("", description="Witness or measured value")


def expected_t1() -> LatticePair:
    """(Y_-1 - Y_0, Y_0 (X_0 - X_1))"""
    return LatticePair(Y(-1) - Y(0), Y(0) * (X(0) - X(1)))


def expected_slow_pair() -> LatticePair:
    """T_2 + 2T_1 written out."""
    p1 = (
        X(-1) * Y(-1) + X(0) * Y(-1) + Y(-1) * 2
        - X(0) * Y(0) - X(1) * Y(0) - Y(0) * 2
    )
    p2 = Y(0) * (Y(-1) + X(0) ** 2 + X(0) * 2 - X(1) ** 2 - X(1) * 2 - Y(1))
    return LatticePair(p1, p2)


def _pair_row(check: str, actual: LatticePair, expected: LatticePair) -> VerifyRow:
    holds = actual == expected
    detail = "" if holds else f"got {actual}"
    return VerifyRow(group="lattice", check=check, holds=holds, detail=detail)


def verify_lattice(fast: bool, seed: int, pool: Optional[WorkerPool] = None) -> List[VerifyRow]:
    rows = [
        _pair_row("toda_T1", toda_generator(1), expected_t1()),
        _pair_row("toda_T2+2T1", toda_combination(SLOW_COMBINATION), expected_slow_pair()),
    ]

    k_max = 2 if fast else 3

    def bracket_row(jk) -> VerifyRow:
        j, k = jk
        bracket = lattice_bracket(toda_generator(j), toda_generator(k))
        return VerifyRow(
            group="lattice",
            check=f"bracket_T{j}_T{k}",
            holds=bracket.is_zero(),
            detail="" if bracket.is_zero() else str(bracket),
        )

    rows += map_ordered(bracket_row, list(combinations(range(1, k_max + 1), 2)), pool)

    N, steps, m_max = (8, 1000, 4) if fast else (16, 10000, 6)
    lat = random_lattice(N, np.random.default_rng(seed))
    flows = {f"T{k}": toda_generator(k) for k in (1, 2)}
    for drift_row in isospectral_drift(flows, lat, 1.0, steps, m_max):
        rows.append(VerifyRow(
            group="lattice",
            check=f"isospectral_{drift_row.flow}_m{drift_row.m}",
            holds=drift_row.drift <= ISO_TOLERANCE,
            numeric=True,
            detail=f"{drift_row.drift:.3e}",
        ))

    defect = flow_commutator_defect(lat, flows["T1"], flows["T2"], 0.5, steps // 10)
    rows.append(VerifyRow(
        group="lattice",
        check="flow_commute_T1_T2",
        holds=defect <= FLOW_COMMUTE_TOLERANCE,
        numeric=True,
        detail=f"{defect:.3e}",
    ))
    return rows


def verify_kdv(fast: bool, pool: Optional[WorkerPool] = None) -> List[VerifyRow]:
    n_max = 3 if fast else 4
    kdv_generator(n_max)

    def row(ij) -> VerifyRow:
        i, j = ij
        bracket = r0_bracket(kdv_generator(i), kdv_generator(j))
        return VerifyRow(
            group="kdv",
            check=f"bracket_K{i}_K{j}",
            holds=bracket.is_zero(),
            detail="" if bracket.is_zero() else f"{len(bracket)} monomials",
        )

    return map_ordered(row, list(combinations(range(1, n_max + 1), 2)), pool)


def verify_commute(
    state: DeformationState, fast: bool, pool: Optional[WorkerPool] = None
) -> List[VerifyRow]:
    """Conjugation leading terms, cross-flow residuals and pairwise commutation mod ε^state.order."""
    N = state.order
    rows = []

    lead = slow_generator(2)
    leads_ok = (
        lead.img_v.coefficient(0) == v(1) - w(1)
        and lead.img_w.coefficient(0) == w(1) - v(1)
    )
    rows.append(VerifyRow(
        group="commute",
        check="slow_leading_terms",
        holds=leads_ok,
        detail="" if leads_ok else f"{lead.img_v.coefficient(0)}; {lead.img_w.coefficient(0)}",
    ))
    rows.append(VerifyRow(
        group="commute",
        check="obstructions_exact",
        holds=all(r.exact for r in state.log),
        detail=f"orders 0..{N - 1}",
    ))

    ks = [1, 2] if fast else [1, 2, 3]
    for k in ks[1:]:
        rho = residual(state, k, N)
        rows.append(VerifyRow(
            group="commute",
            check=f"residual_{flow_label(k)}_mod_eps{N}",
            holds=rho.is_zero(),
            detail="" if rho.is_zero() else f"order {rho.min_exp}: {rho.leading()}",
        ))

    induced = induce_many(state, ks, N, pool)

    def commute_row(pair) -> VerifyRow:
        a, b = pair
        c = commute_check(a, b, N)
        return VerifyRow(
            group="commute",
            check=f"commute_{a.source}_{b.source}_mod_eps{N}",
            holds=c.is_zero(),
            detail="" if c.is_zero() else f"order {c.min_exp}: {c.leading()}",
        )

    rows += map_ordered(commute_row, list(combinations(induced, 2)), pool)
    return rows


def first_failure(rows: List[VerifyRow]) -> Optional[CheckFailed]:
    """Exact failures take precedence over numeric ones."""
    failed = [r for r in rows if not r.holds]
    if not failed:
        return None
    failed.sort(key=lambda r: r.numeric)
    row = failed[0]
    logger.warning("Check did not hold", group=row.group, check=row.check, failed=len(failed))
    return CheckFailed(row.check, row.detail or "does not hold", numeric=row.numeric)


def verify_charnums(
    state: DeformationState, fast: bool, pool: Optional[WorkerPool] = None
) -> List[VerifyRow]:
    """Pivots 1, 3, 5, ... and the leading-term span of the induced flows."""
    N = state.order
    ks = [1, 2] if fast else [1, 2, 3]
    flows = induce_many(state, ks, N, pool)
    report = characteristic_numbers(flows, N, pivot_offset=state.gauge.pivot_offset)
    expected = [2 * i + 1 for i in range(len(ks))]
    return [
        VerifyRow(
            group="charnums",
            check=f"pivots_mod_eps{N}",
            holds=report.pivots == expected,
            detail=" ".join(map(str, report.pivots)),
        ),
        VerifyRow(
            group="charnums",
            check="leading_terms_span_kdv",
            holds=report.span_equal,
            detail=f"kdv_scale {report.kdv_scale}",
        ),
    ]


def verify_bounds(
    state: DeformationState, seed: int, pool: Optional[WorkerPool] = None
) -> List[VerifyRow]:
    """K_n for n < state.order against the printed three-decimal values."""
    report = bounds_table(state, state.order - 1)
    rows = []
    for row in report.rows:
        if row.n not in PRINTED_BOUNDS:
            continue
        gap = abs(float(Fraction(row.exact)) - float(PRINTED_BOUNDS[row.n]))
        rows.append(VerifyRow(
            group="bounds",
            check=f"K{row.n}",
            holds=gap <= DEFAULT_TOLERANCE,
            numeric=True,
            detail=f"{row.decimal} printed {PRINTED_BOUNDS[row.n]}",
        ))
    outcome = reconcile_bounds(report, state, seed=seed, pool=pool)
    rows.append(VerifyRow(
        group="bounds",
        check="reconciled",
        holds=outcome.status == "match",
        detail=outcome.status,
    ))
    return rows


def verify_numlab(
    state: DeformationState, fast: bool, pool: Optional[WorkerPool] = None
) -> List[VerifyRow]:
    """Slow-manifold slopes for g = cos(2πx), the 𝐁 identities and the h -> 0 limit of 𝐇."""
    orders = (2, 4) if fast else (2, 4, 6)
    g = TrigFunction(TrigSpec.cosine(1))
    results = slow_order_sweep(g, state, orders, DEFAULT_H_LIST, pool)
    slopes = {r.order: r.slope for r in results}
    shown = " ".join(f"{k}:{s:.2f}" if s is not None else f"{k}:-" for k, s in slopes.items())
    rows = [VerifyRow(
        group="numlab",
        check="slow_slopes_increase",
        holds=slopes_monotone(results),
        numeric=True,
        detail=shown,
    )]
    if not fast and None not in slopes.values():
        rows += [
            VerifyRow(
                group="numlab",
                check="slow_slope_order6_at_least_5",
                holds=slopes[6] >= 5,
                numeric=True,
                detail=f"{slopes[6]:.2f}",
            ),
            VerifyRow(
                group="numlab",
                check="slow_slope_gain_2_to_6",
                holds=slopes[6] >= slopes[2] + 3,
                numeric=True,
                detail=f"{slopes[6] - slopes[2]:.2f}",
            ),
        ]
    identities = theta_B_identities()
    rows += [
        VerifyRow(group="numlab", check=f"theta_B_{name}", holds=holds)
        for name, holds in identities.items()
    ]
    for b in ((1,) if fast else (1, 2)):
        limit = theta_H_limit(b, THETA_S, THETA_BETA)
        rows.append(VerifyRow(
            group="numlab",
            check=f"theta_H_limit_b{b}",
            holds=limit.error <= LIMIT_RTOL,
            numeric=True,
            detail=f"{limit.error:.3e}",
        ))
    return rows


def verify_poisson(fast: bool, seed: int, pool: Optional[WorkerPool] = None) -> List[VerifyRow]:
    """Every Poisson suite on both brackets at N = POISSON_N."""
    trials = 5 if fast else 20
    return [
        VerifyRow(
            group="poisson",
            check=f"{r.suite}_{r.bracket}_{r.case}",
            holds=r.ok,
            detail="recorded failure" if not r.expected else (r.witness or ""),
        )
        for r in run_suites(POISSON_N, seed=seed, trials=trials, pool=pool)
    ]
