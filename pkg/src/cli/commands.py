from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
import structlog
from pydantic import ValidationError

from cli.config import RunConfig, float_list, int_list, str_list
from cli.manifest import ManifestRecorder
from cli.reports import Report, format_float, tsv_table
from cli.verify import (
    GROUPS,
    LIMIT_RTOL,
    STATE_ORDERS,
    first_failure,
    state_order,
    verify_bounds,
    verify_charnums,
    verify_commute,
    verify_kdv,
    verify_lattice,
    verify_numlab,
    verify_poisson,
)
from deform.bounds import PRINTED_BOUNDS, bounds_table, reconcile_bounds
from deform.cache import StateCache, file_sha256
from deform.charnums import characteristic_numbers
from deform.errors import ResidualNonzero
from deform.induced import induce_many
from deform.recursion import SLOW, FlowSpec, deform_to, flow_label, residual
from deform.state import DEFAULT_RECURSION_CANDIDATES, DeformationState, GaugeRecord
from diffalg import codec
from hierarchy.kdv import generate_kdv
from hierarchy.toda import generate_toda
from numlab.lattice import isospectral_drift, random_lattice
from numlab.slow import slow_order_sweep, slopes_monotone
from numlab.theta import FORM_RTOL, theta_B_identities, theta_H_derivative_check, theta_H_limit, theta_samples
from numlab.trig import TrigFunction, TrigSpec
from poisson.algebra import BracketId
from poisson.checks import SUITES, rows_to_tsv, run_suites
from shared.errors import CheckFailed, UsageError
from shared.workers import WorkerPool

logger = structlog.get_logger(__name__)


def _lattice_gen(g) -> list:
    return [g.axis, g.offset]


@dataclass
class RunContext:
    config: RunConfig
    pool: WorkerPool
    cache: StateCache
    recorder: ManifestRecorder

    def option(self, key: str, default=None):
        return self.config.option(key, default)


def _flow_spec(text: str) -> FlowSpec:
    if text == SLOW:
        return SLOW
    try:
        k = int(text)
    except ValueError as exc:
        raise UsageError(f"flow must be 'slow' or a positive integer, got {text!r}") from exc
    if k < 1:
        raise UsageError(f"flow index must be positive, got {k}")
    return k


def _gauge(ctx: RunContext) -> GaugeRecord:
    pinned = ctx.option("recursion_constant")
    try:
        return GaugeRecord(
            slow_sign=ctx.option("slow_sign", 1),
            recursion_candidates=(pinned,) if pinned else DEFAULT_RECURSION_CANDIDATES,
        ).resolved()
    except ValidationError as exc:
        raise UsageError(f"invalid gauge: {exc}") from exc


def deformation(ctx: RunContext, order: int) -> DeformationState:
    """deform_to through the cache, with the cache file recorded in the manifest."""
    if order < 1:
        raise UsageError(f"order must be positive, got {order}")
    gauge = _gauge(ctx)
    path = ctx.cache.path(gauge)
    before = file_sha256(path) if path.is_file() else None
    if before:
        ctx.recorder.consumed(path)
    with ctx.recorder.phase(f"deform to order {order}"):
        state = deform_to(order, gauge, cache=ctx.cache)
    if path.is_file() and file_sha256(path) != before:
        ctx.recorder.produced(path)
    ctx.recorder.set_gauge(state.gauge.model_dump(mode="json"))
    return state


# --- gen ---------------------------------------------------------------------


def gen_kdv(ctx: RunContext) -> Report:
    ns = int_list(ctx.option("n"))
    if not ns or min(ns) < 0:
        raise UsageError("--n takes non-negative KdV indices")
    with ctx.recorder.phase("kdv generators"):
        polys = generate_kdv(ns, ctx.pool)
    data = {"kdv": [{"n": n, "poly": codec.encode_poly(p)} for n, p in zip(ns, polys)]}
    return Report("gen kdv", codec.dumps(data) + "\n", data)


def gen_toda(ctx: RunContext) -> Report:
    ks = int_list(ctx.option("k"))
    if not ks or min(ks) < 1:
        raise UsageError("--k takes positive Toda indices")
    with ctx.recorder.phase("toda generators"):
        pairs = generate_toda(ks, ctx.pool)
    data = {
        "toda": [
            {
                "k": k,
                "p1": codec.encode_poly(pair.p1, _lattice_gen),
                "p2": codec.encode_poly(pair.p2, _lattice_gen),
            }
            for k, pair in zip(ks, pairs)
        ]
    }
    return Report("gen toda", codec.dumps(data) + "\n", data)


# --- deform ------------------------------------------------------------------


def deform_run(ctx: RunContext) -> Report:
    state = deformation(ctx, ctx.option("order"))
    rows = [(r.order, r.exact, r.monomials, r.weight, r.correction) for r in state.log]
    return Report(
        "deform run",
        tsv_table(("n", "exact", "monomials", "weight", "Q_n"), rows),
        state.to_payload(),
    )


def deform_residual(ctx: RunContext) -> Report:
    N = ctx.option("n")
    flows = [_flow_spec(k) for k in str_list(ctx.option("k"))]
    state = deformation(ctx, N)
    rows, data, failures = [], [], []
    with ctx.recorder.phase("residuals"):
        for k in flows:
            rho = residual(state, k, N)
            label = flow_label(k)
            zero = rho.is_zero()
            lead_order = None if zero else rho.min_exp
            lead = "" if zero else str(rho.leading())
            logger.info("Residual computed", flow=label, N=N, zero=zero)
            rows.append((label, N, zero, lead_order, lead))
            data.append({"flow": label, "N": N, "residual": codec.encode_series(rho)})
            if not zero:
                failures.append(ResidualNonzero(label, lead_order, lead))
    header = ("flow", "N", "zero", "leading_order", "leading_term")
    return Report("deform residual", tsv_table(header, rows), {"residuals": data}, failures)


def deform_charnums(ctx: RunContext) -> Report:
    count = ctx.option("flows")
    N = ctx.option("n")
    if count < 1:
        raise UsageError("--flows must be positive")
    state = deformation(ctx, N)
    with ctx.recorder.phase("induced flows"):
        flows = induce_many(state, list(range(1, count + 1)), N, ctx.pool)
    with ctx.recorder.phase("characteristic numbers"):
        report = characteristic_numbers(flows, N, pivot_offset=state.gauge.pivot_offset)
    rows = zip(report.pivots, report.valuations, report.sources, report.leading_terms)
    failures = []
    expected = [2 * i + 1 for i in range(count)]
    if report.pivots != expected:
        failures.append(CheckFailed("characteristic numbers", f"pivots {report.pivots}, expected {expected}"))
    if not report.span_equal:
        failures.append(CheckFailed("leading term span", "leading terms do not span the KdV flows"))
    return Report(
        "deform charnums",
        tsv_table(("pivot", "valuation", "source", "leading_term"), rows),
        report.model_dump(mode="json"),
        failures,
    )


def deform_bounds(ctx: RunContext) -> Report:
    n_max = ctx.option("max_n")
    n_min = ctx.option("min_n")
    if n_min < 1 or n_max < n_min:
        raise UsageError("need 1 <= --min-n <= --max-n")
    state = deformation(ctx, n_max + 1)
    with ctx.recorder.phase("bounds"):
        table = bounds_table(state, n_max, n_min)
    data = {"bounds": table.model_dump(mode="json")}
    failures = []
    if ctx.option("reconcile"):
        with ctx.recorder.phase("reconciliation"):
            recon = reconcile_bounds(
                table,
                state,
                PRINTED_BOUNDS,
                tolerance=ctx.option("tolerance"),
                seed=ctx.config.seed,
                pool=ctx.pool,
            )
        data["reconciliation"] = recon.model_dump(mode="json")
        if recon.status != "match":
            for n, q in recon.audit.items():
                logger.warning("Audit correction", n=n, Q_n=q)
        if recon.status == "failed":
            failures.append(CheckFailed(
                "bounds reconciliation",
                f"{len(recon.mismatches)} rows differ and the degraded checks fail",
                numeric=True,
            ))
    return Report("deform bounds", table.to_tsv(), data, failures)


# --- verify ------------------------------------------------------------------


def verify(ctx: RunContext) -> Report:
    group = ctx.config.subcommand
    fast = ctx.option("fast")
    groups = GROUPS if group == "all" else (group,)
    rows = []
    if "lattice" in groups:
        with ctx.recorder.phase("verify lattice"):
            rows += verify_lattice(fast, ctx.config.seed, ctx.pool)
    if "kdv" in groups:
        with ctx.recorder.phase("verify kdv"):
            rows += verify_kdv(fast, ctx.pool)
    exact_groups = [g for g in groups if g in STATE_ORDERS]
    if exact_groups:
        fixed = ctx.option("order")
        orders = {g: int(fixed) if fixed else state_order(g, fast) for g in exact_groups}
        state = deformation(ctx, max(orders.values()))
    if "commute" in groups:
        with ctx.recorder.phase("verify commute"):
            rows += verify_commute(state.truncated_to(orders["commute"]), fast, ctx.pool)
    if "charnums" in groups:
        with ctx.recorder.phase("verify charnums"):
            rows += verify_charnums(state.truncated_to(orders["charnums"]), fast, ctx.pool)
    if "bounds" in groups:
        with ctx.recorder.phase("verify bounds"):
            rows += verify_bounds(state.truncated_to(orders["bounds"]), ctx.config.seed, ctx.pool)
    if "numlab" in groups:
        with ctx.recorder.phase("verify numlab"):
            rows += verify_numlab(state.truncated_to(orders["numlab"]), fast, ctx.pool)
    if "poisson" in groups:
        with ctx.recorder.phase("verify poisson"):
            rows += verify_poisson(fast, ctx.config.seed, ctx.pool)
    failure = first_failure(rows)
    table = tsv_table(
        ("group", "check", "holds", "numeric", "detail"),
        [(r.group, r.check, r.holds, r.numeric, r.detail) for r in rows],
    )
    data = {"checks": [r.model_dump(mode="json") for r in rows]}
    return Report(f"verify {group}", table, data, [failure] if failure else [])


# --- numlab ------------------------------------------------------------------


def numlab_slow(ctx: RunContext) -> Report:
    orders = int_list(ctx.option("orders"))
    h_list = float_list(ctx.option("h"))
    if not orders or min(orders) < 0:
        raise UsageError("--orders takes non-negative truncation orders")
    if len(h_list) < 2:
        raise UsageError("--h needs at least two spacings to fit a slope")
    spec_path = ctx.option("g_spec")
    if spec_path:
        try:
            spec = TrigSpec.from_file(spec_path)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read trig spec {spec_path}: {exc}") from exc
        ctx.recorder.consumed(spec_path)
    else:
        spec = TrigSpec.cosine(1)
    state = deformation(ctx, max(orders) + 1)
    with ctx.recorder.phase("slow manifold"):
        results = slow_order_sweep(TrigFunction(spec), state, orders, h_list, ctx.pool)
    rows = [
        (r.order, format_float(h), d, r.slope)
        for r in results
        for h, d in zip(r.h, r.defect)
    ]
    failures = []
    if len(results) > 1 and not slopes_monotone(results):
        failures.append(CheckFailed(
            "slow manifold slopes",
            ", ".join(f"order {r.order}: {r.slope}" for r in results),
            numeric=True,
        ))
    return Report(
        "numlab slow",
        tsv_table(("order", "h", "defect", "slope"), rows),
        {"g": spec.model_dump(mode="json"), "results": [r.model_dump(mode="json") for r in results]},
        failures,
    )


def numlab_iso(ctx: RunContext) -> Report:
    N = ctx.option("N")
    ks = int_list(ctx.option("k"))
    tolerance = ctx.option("tolerance")
    if not ks or min(ks) < 1:
        raise UsageError("--k takes positive Toda indices")
    lat = random_lattice(N, np.random.default_rng(ctx.config.seed))
    flows = dict(zip((f"T{k}" for k in ks), generate_toda(ks, ctx.pool)))
    with ctx.recorder.phase("isospectral"):
        rows = isospectral_drift(flows, lat, ctx.option("t_end"), ctx.option("steps"), ctx.option("m_max"))
    worst = max(rows, key=lambda r: r.drift)
    failures = []
    if worst.drift > tolerance:
        failures.append(CheckFailed(
            f"isospectral {worst.flow} m={worst.m}",
            f"drift {worst.drift:.3e} > {tolerance:.1e}",
            numeric=True,
        ))
    return Report(
        "numlab iso",
        tsv_table(("flow", "m", "initial", "drift"), [(r.flow, r.m, r.initial, r.drift) for r in rows]),
        {"N": N, "rows": [r.model_dump(mode="json") for r in rows]},
        failures,
    )


def numlab_theta(ctx: RunContext) -> Report:
    b = ctx.option("b")
    try:
        s = complex(ctx.option("s"))
        beta = complex(ctx.option("beta"))
    except ValueError as exc:
        raise UsageError(f"--s and --beta take complex numbers: {exc}") from exc
    h_list = float_list(ctx.option("h"))

    with ctx.recorder.phase("theta identities"):
        identities = theta_B_identities()
    with ctx.recorder.phase("theta samples"):
        samples = theta_samples(ctx.option("samples"), ctx.config.seed)
    with ctx.recorder.phase("theta limit"):
        limit = theta_H_limit(b, s, beta, h_list)
        derivative = theta_H_derivative_check(b, beta)

    worst = max((r.form_gap for r in samples), default=0.0)
    rows = [
        ("b_forms_equal", identities["forms_equal"], None, "exact"),
        ("b_alpha_zero", identities["alpha_zero"], None, "exact"),
        ("b_sample_forms", worst <= FORM_RTOL, worst, f"{len(samples)} samples"),
        (
            "h_limit",
            limit.error <= LIMIT_RTOL,
            limit.error,
            f"extrapolated {complex(*limit.extrapolated):.10g} expected {complex(*limit.expected):.10g}",
        ),
        (
            "h_derivative",
            derivative.agree,
            None,
            f"lhs {derivative.lhs}; rhs {derivative.rhs}; b_power {derivative.b_power}",
        ),
    ]
    failures = []
    for name, holds, _, _ in rows[:2]:
        if not holds:
            failures.append(CheckFailed(name, "symbolic identity does not reduce to zero"))
    for name, holds, value, detail in rows[2:4]:
        if not holds:
            failures.append(CheckFailed(name, f"{value:.3e}: {detail}", numeric=True))
    # the derivative comparison is recorded, a disagreement is not a failure
    data = {
        "identities": identities,
        "samples": [r.model_dump(mode="json") for r in samples],
        "limit": limit.model_dump(mode="json"),
        "derivative": derivative.model_dump(mode="json"),
    }
    return Report("numlab theta", tsv_table(("check", "holds", "value", "detail"), rows), data, failures)


# --- poisson -----------------------------------------------------------------


def poisson_check(ctx: RunContext) -> Report:
    N = ctx.option("N")
    suites = str_list(ctx.option("suite"))
    unknown = sorted(set(suites) - set(SUITES))
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {', '.join(SUITES)}")
    try:
        brackets = [BracketId(b) for b in str_list(ctx.option("bracket"))]
    except ValueError as exc:
        raise UsageError(f"--bracket takes p1 and/or p2: {exc}") from exc
    if N < 3:
        raise UsageError("the cyclic brackets need --N >= 3")
    with ctx.recorder.phase("poisson suites"):
        rows = run_suites(N, brackets, suites, ctx.config.seed, ctx.option("trials"), ctx.pool)
    failures = [
        CheckFailed(f"{r.suite} {r.bracket} {r.case}", r.witness or "unexpected outcome")
        for r in rows
        if not r.ok
    ]
    return Report(
        "poisson check",
        rows_to_tsv(rows),
        {"N": N, "rows": [r.model_dump(mode="json") for r in rows]},
        failures[:1],
    )


Handler = Callable[[RunContext], Report]

HANDLERS: Dict[Tuple[str, str], Handler] = {
    ("gen", "kdv"): gen_kdv,
    ("gen", "toda"): gen_toda,
    ("deform", "run"): deform_run,
    ("deform", "residual"): deform_residual,
    ("deform", "charnums"): deform_charnums,
    ("deform", "bounds"): deform_bounds,
    ("verify", "all"): verify,
    ("verify", "commute"): verify,
    ("verify", "lattice"): verify,
    ("verify", "kdv"): verify,
    ("verify", "charnums"): verify,
    ("verify", "bounds"): verify,
    ("verify", "numlab"): verify,
    ("verify", "poisson"): verify,
    ("numlab", "slow"): numlab_slow,
    ("numlab", "iso"): numlab_iso,
    ("numlab", "theta"): numlab_theta,
    ("poisson", "check"): poisson_check,
}
