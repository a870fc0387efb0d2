import random
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, Field

from deform.errors import CorrectionFailed, ObstructionNotExact, OrderNotReached
from deform.recursion import deform_to
from deform.state import DEFAULT_RECURSION_CANDIDATES, DeformationState, GaugeRecord
from diffalg import codec
from diffalg.diffpoly import DiffPoly
from shared.workers import WorkerPool, map_ordered

logger = structlog.get_logger(__name__)

# decimal values of K_n as printed for the bound |g^(n)| < n!
PRINTED_BOUNDS: Dict[int, str] = {
    2: ".500", 3: ".375", 4: ".359", 5: ".312", 6: ".300", 7: ".289",
    8: ".283", 9: ".288", 10: ".285", 11: ".305", 12: ".312", 13: ".348",
    14: ".387", 15: ".452", 16: ".634", 17: ".756", 18: "1.70", 19: "1.95",
    20: "7.81", 21: "8.46", 22: "53.2", 23: "55.2",
}

DEFAULT_TOLERANCE = 0.002
DEFAULT_SWEEP_ORDER = 5
DEFAULT_BOUND_TRIALS = 200


def bound_value(q: DiffPoly) -> Fraction:
    """Σ |c|·∏ (j!)^e over the monomials c·∏ (w^(j))^e of q."""
    total = Fraction(0)
    for mono, c in q.items():
        term = abs(Fraction(c))
        for gen, exp in mono:
            term *= factorial(gen.order) ** exp
        total += term
    return total


def render_decimal(value: Fraction, places: int = 3) -> str:
    """Round half away from zero to `places` decimals."""
    with localcontext() as ctx:
        ctx.prec = max(50, len(str(value.numerator)) + places + 5)
        quantum = Decimal(1).scaleb(-places)
        dec = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
            quantum, rounding=ROUND_HALF_UP
        )
    return f"{dec:.{places}f}"


class BoundsRow(BaseModel):
    n: int
    exact: str = Field(..., description="K_n as num/den")
    decimal: str = Field(..., description="K_n rounded half away from zero to 3 places")


class BoundsReport(BaseModel):
    """K_n for each order of the deformation series"""
    rows: List[BoundsRow]

    def value(self, n: int) -> Fraction:
        for row in self.rows:
            if row.n == n:
                return Fraction(row.exact)
        raise KeyError(n)

    def to_tsv(self) -> str:
        lines = ["n\tK_n_exact\tK_n_dec"]
        lines += [f"{r.n}\t{r.exact}\t{r.decimal}" for r in self.rows]
        return "\n".join(lines) + "\n"


def bounds_table(state: DeformationState, n_max: int, n_min: int = 1) -> BoundsReport:
    """
    K_n for n_min <= n <= n_max.

    Raises:
        OrderNotReached: state.order <= n_max
    """
    if state.order <= n_max:
        raise OrderNotReached(n_max + 1, state.order)
    rows = []
    for n in range(n_min, n_max + 1):
        value = bound_value(state.coefficient(n))
        rows.append(BoundsRow(n=n, exact=codec.encode_fraction(value), decimal=render_decimal(value)))
    return BoundsReport(rows=rows)


def verify_bound_rule(
    q: DiffPoly,
    seed: int,
    trials: int = DEFAULT_BOUND_TRIALS,
) -> bool:
    """
    Brute-force check of the per-monomial bound on q.

    The absolute-coefficient polynomial evaluated at w^(j) = j! must equal
    bound_value(q) exactly, and |q(jets)| <= bound_value(q) must hold for
    random jets with |g^(j)| <= j! and for the jets j!·sin(2πx + jπ/2).
    """
    bound = bound_value(q)
    absolute = q.__class__({m: abs(Fraction(c)) for m, c in q.items()})
    at_factorials = absolute.evaluate(lambda g: Fraction(factorial(g.order)), zero=Fraction(0))
    if at_factorials != bound:
        logger.warning("Bound rule mismatch", exact=str(at_factorials), bound=str(bound))
        return False

    order = q.max_order() + 1
    rng = random.Random(seed)
    samples = [
        [rng.uniform(-1.0, 1.0) * factorial(j) for j in range(order)]
        for _ in range(trials)
    ]
    xs = np.linspace(0.0, 1.0, 64, endpoint=False)
    samples += [
        [factorial(j) * float(np.sin(2 * np.pi * x + j * np.pi / 2)) for j in range(order)]
        for x in xs
    ]
    limit = float(bound) * (1 + 1e-12) + 1e-12
    worst = 0.0
    for jets in samples:
        value = abs(q.evaluate(lambda g: jets[g.order], 0.0, float))
        worst = max(worst, value)
        if value > limit:
            logger.warning("Bound exceeded", value=value, bound=float(bound))
            return False
    logger.debug("Bound rule verified", bound=float(bound), worst=worst, samples=len(samples))
    return True


class GaugeSweepEntry(BaseModel):
    slow_sign: int
    recursion_constant: str
    ok: bool
    failure: Optional[str] = None
    bounds: Dict[int, str] = Field(default_factory=dict)


class ReconciliationReport(BaseModel):
    """Outcome of comparing computed K_n with the printed table"""
    status: str = Field(..., description="match, degraded or failed")
    mismatches: List[Dict[str, str]] = Field(default_factory=list)
    audit: Dict[int, str] = Field(default_factory=dict, description="Exact Q_2..Q_4")
    sweep: List[GaugeSweepEntry] = Field(default_factory=list)
    positive: Optional[bool] = None
    bound_rule: Optional[bool] = None


def _sweep_one(args) -> GaugeSweepEntry:
    sign, c, order = args
    gauge = GaugeRecord(slow_sign=sign, recursion_candidates=(c,))
    try:
        state = deform_to(order, gauge)
    except (CorrectionFailed, ObstructionNotExact) as exc:
        return GaugeSweepEntry(slow_sign=sign, recursion_constant=c, ok=False, failure=str(exc))
    table = bounds_table(state, order - 1)
    return GaugeSweepEntry(
        slow_sign=sign,
        recursion_constant=c,
        ok=True,
        bounds={row.n: row.decimal for row in table.rows},
    )


def gauge_sweep(
    order: int = DEFAULT_SWEEP_ORDER,
    signs: Sequence[int] = (1, -1),
    candidates: Sequence[str] = DEFAULT_RECURSION_CANDIDATES,
    pool: Optional[WorkerPool] = None,
) -> List[GaugeSweepEntry]:
    """Rebuild Q to `order` for every (sign of D_1, pinned c) and report K_n."""
    jobs = [(sign, c, order) for sign in signs for c in candidates]
    entries = map_ordered(_sweep_one, jobs, pool)
    for e in entries:
        logger.info("Gauge tried", slow_sign=e.slow_sign, c=e.recursion_constant, ok=e.ok)
    return entries


def reconcile_bounds(
    report: BoundsReport,
    state: DeformationState,
    reference: Mapping[int, str] = PRINTED_BOUNDS,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    sweep_order: int = DEFAULT_SWEEP_ORDER,
    pool: Optional[WorkerPool] = None,
) -> ReconciliationReport:
    """
    Compare with the printed values; on mismatch run the audit protocol.

    The audit emits exact Q_2..Q_4, sweeps the gauge, and falls back to the
    degraded checks (all K_n > 0, bound rule on Q_2 and Q_3).
    """
    mismatches = []
    for row in report.rows:
        if row.n not in reference:
            continue
        printed = float(reference[row.n])
        computed = float(Fraction(row.exact))
        if abs(computed - printed) > tolerance:
            mismatches.append({"n": str(row.n), "computed": row.decimal, "printed": reference[row.n]})
    if not mismatches:
        logger.info("Bounds match printed table", rows=len(report.rows))
        return ReconciliationReport(status="match")

    logger.warning("Bounds differ from printed table", mismatches=len(mismatches))
    audit = {n: str(state.coefficient(n)) for n in range(2, min(5, state.order))}
    sweep = gauge_sweep(min(sweep_order, state.order), pool=pool)
    positive = all(Fraction(row.exact) > 0 for row in report.rows)
    rule = all(
        verify_bound_rule(state.coefficient(n), seed=seed + n)
        for n in range(2, min(4, state.order))
    )
    return ReconciliationReport(
        status="degraded" if positive and rule else "failed",
        mismatches=mismatches,
        audit=audit,
        sweep=sweep,
        positive=positive,
        bound_rule=rule,
    )
