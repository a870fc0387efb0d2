import cmath
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
import sympy
from pydantic import BaseModel, Field

from numlab.errors import PoleHit
from shared.errors import CheckFailed

logger = structlog.get_logger(__name__)

POLE_TOL = 1e-12
FORM_RTOL = 1e-12
DERIVATIVE_RTOL = 1e-10
DEFAULT_LIMIT_H = (1e-2, 5e-3, 2.5e-3, 1.25e-3)


@dataclass(frozen=True)
class DegenerateThetaParams:
    """
    Parameters of the degenerate theta closed forms.

    p, s, x feed 𝐁; β = x/s feeds 𝐇. b is the winding of v₀ = exp(iπbh)
    in the h -> 0 limit.
    """
    p: complex
    s: complex
    x: complex
    b: int = 1

    @property
    def q(self) -> complex:
        return 1 / self.p

    @property
    def beta(self) -> complex:
        return self.x / self.s

    @classmethod
    def from_angle(cls, p: complex, s: complex, alpha: float, b: int = 1) -> "DegenerateThetaParams":
        """x = s·exp(2πiα)."""
        return cls(p=p, s=s, x=s * cmath.exp(2j * cmath.pi * alpha), b=b)


def theta(k: complex, z: complex) -> complex:
    """ϑ_k(z) = 1 - z/k."""
    return 1 - z / k


def _r(z: complex, t: complex, p: complex) -> complex:
    return theta(t / p ** 2, z) / theta(t, z)


def _guard(form: str, point, *values: complex) -> None:
    for value in values:
        if abs(value) < POLE_TOL:
            raise PoleHit(form, point)


def theta_B_ratio(p: complex, s: complex, x: complex) -> complex:
    """r(q,x)·r(p,s) / (r(p,x)·r(q,s)) with r(z,t) = ϑ_{t/p²}(z)/ϑ_t(z)."""
    q = 1 / p
    _guard("theta_B", (p, s, x), p, s, x, theta(x, q), theta(s, p), theta(x, p), theta(s, q))
    denom = _r(p, x, p) * _r(q, s, p)
    _guard("theta_B", (p, s, x), denom)
    return _r(q, x, p) * _r(p, s, p) / denom


def theta_B_expanded(p: complex, s: complex, x: complex) -> complex:
    """The product of the eight linear factors in p, 1/s and 1/x."""
    num = (1 - p / x) * (1 - 1 / (p * s)) * (1 - p / x) * (1 - p ** 3 / s)
    factors = ((1 - p ** 3 / x), (1 - p / s), (1 - 1 / (x * p)), (1 - p / s))
    _guard("theta_B", (p, s, x), *factors)
    return num / (factors[0] * factors[1] * factors[2] * factors[3])


def theta_B(params: DegenerateThetaParams) -> complex:
    """
    𝐁 at (p, s, x), computed through the r-ratio and the expanded product.

    Raises:
        PoleHit: a denominator factor vanishes
        CheckFailed: the two forms disagree beyond FORM_RTOL
    """
    ratio = theta_B_ratio(params.p, params.s, params.x)
    expanded = theta_B_expanded(params.p, params.s, params.x)
    if abs(ratio - expanded) > FORM_RTOL * max(1.0, abs(ratio)):
        raise CheckFailed(
            "theta_B forms",
            f"r-ratio {ratio!r} vs expanded {expanded!r} at p={params.p}, s={params.s}, x={params.x}",
            numeric=True,
        )
    return ratio


def theta_B_v0(s: complex, x: complex, v0: complex) -> complex:
    """𝐁 as a rational function of v₀ = p."""
    den = (v0 * x - 1) * (v0 - s) ** 2 * (v0 ** 3 - x)
    _guard("theta_B_v0", (s, x, v0), den)
    return (v0 - x) ** 2 * (v0 * s - 1) * (v0 ** 3 - s) / den


def theta_B_symbolic() -> Tuple[sympy.Expr, sympy.Expr]:
    """(r-ratio form, expanded form) as sympy expressions in p, s, x."""
    p, s, x = sympy.symbols("p s x")
    q = 1 / p

    def th(k, z):
        return 1 - z / k

    def r(z, t):
        return th(t / p ** 2, z) / th(t, z)

    ratio = r(q, x) * r(p, s) / (r(p, x) * r(q, s))
    expanded = (
        (1 - p / x) * (1 - 1 / (p * s)) * (1 - p / x) * (1 - p ** 3 / s)
        / ((1 - p ** 3 / x) * (1 - p / s) * (1 - 1 / (x * p)) * (1 - p / s))
    )
    return ratio, expanded


def theta_B_identities() -> dict:
    """Exact rational checks: both forms coincide, and 𝐁 = 1 when x = s."""
    ratio, expanded = theta_B_symbolic()
    s, x = sympy.symbols("s x")
    return {
        "forms_equal": sympy.cancel(ratio - expanded) == 0,
        "alpha_zero": sympy.cancel(ratio.subs(x, s)) == 1,
    }


def theta_H(s: complex, beta: complex) -> complex:
    """𝐇 = 4π²·s(s²β² - β + 1 - s²β) / ((sβ - 1)²(s - 1)²)."""
    _guard("theta_H", (s, beta), beta, s * beta - 1, s - 1)
    num = s * (s ** 2 * beta ** 2 - beta + 1 - s ** 2 * beta)
    return 4 * np.pi ** 2 * num / ((s * beta - 1) ** 2 * (s - 1) ** 2)


def _theta_H_expr(s, beta):
    num = s * (s ** 2 * beta ** 2 - beta + 1 - s ** 2 * beta)
    return 4 * sympy.pi ** 2 * num / ((s * beta - 1) ** 2 * (s - 1) ** 2)


class ThetaLimitReport(BaseModel):
    """(𝐁 - 1)/h² with v₀ = exp(iπbh) against b²·𝐇"""
    b: int
    h: List[float]
    values: List[Tuple[float, float]] = Field(..., description="(re, im) of (𝐁 - 1)/h² per h")
    extrapolated: Tuple[float, float]
    expected: Tuple[float, float] = Field(..., description="b²·𝐇(s, β)")
    error: float = Field(..., description="|extrapolated - expected| / max(1, |expected|)")


def _pair(z: complex) -> Tuple[float, float]:
    return float(z.real), float(z.imag)


def theta_H_limit(
    b: int,
    s: complex,
    beta: complex,
    h_list: Sequence[float] = DEFAULT_LIMIT_H,
) -> ThetaLimitReport:
    """
    Finite-h values of (𝐁 - 1)/h² at x = sβ, v₀ = exp(iπbh), and their
    polynomial (Richardson) extrapolation to h = 0.

    𝐁 - 1 starts at (v₀ - 1)², so the quotient has a regular expansion in bh.
    h_list holds the values of |b|·h; the report lists h itself.
    """
    x = s * beta
    hs = np.asarray(h_list, dtype=np.float64) / max(1, abs(b))
    vals = np.array(
        [(theta_B_v0(s, x, cmath.exp(1j * cmath.pi * b * h)) - 1) / h ** 2 for h in hs]
    )
    deg = min(3, len(hs) - 1)
    re0 = np.polyfit(hs, vals.real, deg)[-1]
    im0 = np.polyfit(hs, vals.imag, deg)[-1]
    extrapolated = complex(re0, im0)
    expected = b * b * theta_H(s, beta)
    error = abs(extrapolated - expected) / max(1.0, abs(expected))
    logger.debug("Theta limit", b=b, error=error)
    return ThetaLimitReport(
        b=b,
        h=[float(h) for h in hs],
        values=[_pair(v) for v in vals],
        extrapolated=_pair(extrapolated),
        expected=_pair(expected),
        error=float(error),
    )


class ThetaDerivativeReport(BaseModel):
    """d𝐇(s(t), β)/dt at t = 0, s(t) = 2b/t - 1, next to the printed value"""
    b: int
    beta: str
    lhs: str = Field(..., description="Exact t-derivative of the 𝐇 display")
    rhs: str = Field(..., description="Printed value 2π²(β-1)b/β")
    lhs_value: Tuple[float, float]
    rhs_value: Tuple[float, float]
    ratio: str = Field(..., description="lhs/rhs, exact")
    agree: bool
    b_power: Optional[int] = Field(None, description="k with lhs/rhs = b^k, if any small k fits")


def theta_H_derivative_check(b: int, beta: Union[str, complex, sympy.Expr]) -> ThetaDerivativeReport:
    """
    Taylor-expand 𝐇(s(t), β) in t exactly, with π kept symbolic.

    A disagreement with the printed value is reported, not raised; when the
    two differ by a power of b that power is recorded.
    """
    if b == 0:
        raise PoleHit("theta_H_derivative_check", {"b": b})
    t = sympy.Symbol("t")
    B = sympy.Integer(b)
    beta_expr = sympy.nsimplify(sympy.sympify(beta))
    if beta_expr == 0:
        raise PoleHit("theta_H_derivative_check", {"beta": str(beta)})
    s = 2 * B / t - 1
    H = sympy.cancel(_theta_H_expr(s, beta_expr))
    lhs = sympy.simplify(sympy.series(H, t, 0, 2).removeO().coeff(t, 1))
    rhs = sympy.simplify(2 * sympy.pi ** 2 * (beta_expr - 1) * B / beta_expr)
    lhs_n = complex(sympy.N(lhs, 30))
    rhs_n = complex(sympy.N(rhs, 30))
    agree = abs(lhs_n - rhs_n) <= DERIVATIVE_RTOL * max(1.0, abs(rhs_n))

    ratio = sympy.simplify(lhs / rhs) if rhs != 0 else sympy.nan
    b_power = None
    if rhs != 0 and abs(b) != 1:
        for k in range(-4, 5):
            if sympy.simplify(ratio - B ** k) == 0:
                b_power = k
                break
    if not agree:
        logger.warning(
            "Theta derivative differs from printed value",
            b=b, beta=str(beta_expr), lhs=str(lhs), rhs=str(rhs), b_power=b_power,
        )
    return ThetaDerivativeReport(
        b=b,
        beta=str(beta_expr),
        lhs=str(lhs),
        rhs=str(rhs),
        lhs_value=_pair(lhs_n),
        rhs_value=_pair(rhs_n),
        ratio=str(ratio),
        agree=agree,
        b_power=b_power,
    )


class ThetaSampleRow(BaseModel):
    index: int
    p: Tuple[float, float]
    s: Tuple[float, float]
    x: Tuple[float, float]
    form_gap: float = Field(..., description="|r-ratio - expanded| / max(1, |𝐁|)")
    swap_product: Tuple[float, float] = Field(..., description="𝐁(p)·𝐁(1/p), recorded only")


def _random_point(rng: np.random.Generator) -> complex:
    return float(rng.uniform(0.5, 2.0)) * cmath.exp(2j * cmath.pi * float(rng.uniform()))


def theta_samples(samples: int, seed: int) -> List[ThetaSampleRow]:
    """Compare the two 𝐁 forms at random points of the annulus 1/2 <= |z| <= 2."""
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < samples:
        p, s, x = (_random_point(rng) for _ in range(3))
        try:
            ratio = theta_B_ratio(p, s, x)
            expanded = theta_B_expanded(p, s, x)
            swapped = theta_B_ratio(1 / p, s, x)
        except PoleHit:
            continue
        rows.append(ThetaSampleRow(
            index=len(rows),
            p=_pair(p),
            s=_pair(s),
            x=_pair(x),
            form_gap=float(abs(ratio - expanded) / max(1.0, abs(ratio))),
            swap_product=_pair(ratio * swapped),
        ))
    logger.info("Theta samples drawn", samples=samples, worst_gap=max((r.form_gap for r in rows), default=0.0))
    return rows
