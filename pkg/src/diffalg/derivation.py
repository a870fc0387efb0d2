import threading
from collections import defaultdict
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Tuple, Union

import structlog

from diffalg.diffpoly import V, W, DiffPoly, Generator, v, w
from diffalg.errors import NotTame, TruncationMismatch
from diffalg.series import EpsSeries, Scalar
from diffalg.sparse import Monomial

logger = structlog.get_logger(__name__)

SeriesLike = Union[EpsSeries, DiffPoly]


def _as_series(p: SeriesLike, trunc: int) -> EpsSeries:
    if isinstance(p, EpsSeries):
        return p
    return EpsSeries.from_poly(p, trunc)


class TameDerivation:
    """
    Derivation of R[[ε]] that commutes with ∂ and kills ε.

    It is fixed by the two images D(v^(0)) and D(w^(0)); the image of v^(n)
    is ∂^n D(v^(0)). Those images are memoized per generator behind a lock,
    so one instance can be shared between worker threads.
    """

    __slots__ = ("img_v", "img_w", "_images", "_lock")

    def __init__(self, img_v: EpsSeries, img_w: EpsSeries):
        self.img_v = img_v
        self.img_w = img_w
        self._images: Dict[Generator, EpsSeries] = {
            Generator(V, 0): img_v,
            Generator(W, 0): img_w,
        }
        self._lock = threading.Lock()

    @classmethod
    def zero(cls, trunc: int) -> "TameDerivation":
        return cls(EpsSeries.zero(trunc), EpsSeries.zero(trunc))

    @classmethod
    def translation(cls, trunc: int) -> "TameDerivation":
        """∂ itself, seen as a tame derivation."""
        return cls(EpsSeries.from_poly(v(1), trunc), EpsSeries.from_poly(w(1), trunc))

    @property
    def trunc(self) -> int:
        return min(self.img_v.trunc, self.img_w.trunc)

    @property
    def valuation(self) -> int:
        return min(self.img_v.min_exp, self.img_w.min_exp)

    def image(self, gen: Generator) -> EpsSeries:
        cached = self._images.get(gen)
        if cached is not None:
            return cached
        with self._lock:
            base = Generator(gen.letter, 0)
            current = self._images[base]
            for order in range(1, gen.order + 1):
                key = Generator(gen.letter, order)
                nxt = self._images.get(key)
                if nxt is None:
                    nxt = current.partial()
                    self._images[key] = nxt
                current = nxt
            return current

    def __call__(self, p: SeriesLike) -> EpsSeries:
        return derive(self, p)

    # --- linear structure -------------------------------------------------

    def __add__(self, other: "TameDerivation") -> "TameDerivation":
        return TameDerivation(self.img_v + other.img_v, self.img_w + other.img_w)

    def __sub__(self, other: "TameDerivation") -> "TameDerivation":
        return TameDerivation(self.img_v - other.img_v, self.img_w - other.img_w)

    def __neg__(self) -> "TameDerivation":
        return TameDerivation(-self.img_v, -self.img_w)

    def scale(self, factor: Scalar) -> "TameDerivation":
        return TameDerivation(self.img_v.scale(factor), self.img_w.scale(factor))

    def __mul__(self, factor: Scalar) -> "TameDerivation":
        return self.scale(factor)

    __rmul__ = __mul__

    def div_eps(self, k: int = 1) -> "TameDerivation":
        return TameDerivation(self.img_v.div_eps(k), self.img_w.div_eps(k))

    def truncate(self, n: int) -> "TameDerivation":
        return TameDerivation(self.img_v.truncate(n), self.img_w.truncate(n))

    def is_zero(self) -> bool:
        return self.img_v.is_zero() and self.img_w.is_zero()

    def __eq__(self, other) -> bool:
        if not isinstance(other, TameDerivation):
            return NotImplemented
        return self.img_v == other.img_v and self.img_w == other.img_w

    def __hash__(self) -> int:
        return hash((self.img_v, self.img_w))

    def __repr__(self) -> str:
        return f"TameDerivation(v0 -> {self.img_v}, w0 -> {self.img_w})"


def _derive_poly(D: TameDerivation, c: DiffPoly) -> List[EpsSeries]:
    return [D.image(gen).scale(c.diff(gen)) for gen in c.generators()]


def derive(D: TameDerivation, p: SeriesLike) -> EpsSeries:
    """
    Apply D to p by the Leibniz rule, coefficient by coefficient in ε.

    The result is known modulo ε^min(p.trunc + val(D), k + D.trunc) where k
    runs over the powers of ε present in p.
    """
    p = _as_series(p, D.trunc)
    trunc = p.trunc + D.valuation
    for k, _ in p.terms():
        trunc = min(trunc, k + D.trunc)
    total = EpsSeries.zero(trunc)
    for k, c in p.terms():
        for piece in _derive_poly(D, c):
            total = total + piece.shift(k)
    return total


def commutator(D1: TameDerivation, D2: TameDerivation) -> TameDerivation:
    """[D1, D2]; tame again since both commute with ∂."""
    img_v = derive(D1, D2.img_v) - derive(D2, D1.img_v)
    img_w = derive(D1, D2.img_w) - derive(D2, D1.img_w)
    return TameDerivation(img_v, img_w)


# --- Φ: A = -2 + ε²f, B = 1 + ε²g at the ring level --------------------------

_PHI_SHIFT = {V: Fraction(-2), W: Fraction(1)}


def _phi_monomial(mono: Monomial) -> List[Tuple[int, Monomial, Fraction]]:
    """Φ of one monomial as (ε-power, monomial, coefficient) terms."""
    rest = []
    base_exp = {V: 0, W: 0}
    higher = 0
    for gen, exp in mono:
        if gen.order == 0:
            base_exp[gen.letter] = exp
        else:
            rest.append((gen, exp))
            higher += exp
    a, b = base_exp[V], base_exp[W]
    out = []
    for i in range(a + 1):
        ca = comb(a, i) * _PHI_SHIFT[V] ** (a - i)
        for j in range(b + 1):
            cb = comb(b, j) * _PHI_SHIFT[W] ** (b - j)
            factors = list(rest)
            if i:
                factors.append((Generator(V, 0), i))
            if j:
                factors.append((Generator(W, 0), j))
            out.append((2 * (higher + i + j), tuple(sorted(factors)), ca * cb))
    return out


def phi(p: SeriesLike, trunc: Optional[int] = None) -> EpsSeries:
    """
    The ring map v^(0) -> -2 + ε²v^(0), w^(0) -> 1 + ε²w^(0), v^(j), w^(j) -> ε²v^(j), ε²w^(j).

    Args:
        p: series (or polynomial, read as exact) to transform
        trunc: optional earlier truncation for the result

    Returns:
        Φ(p), known modulo the same power of ε as p
    """
    if isinstance(p, DiffPoly):
        p = EpsSeries.from_poly(p, trunc if trunc is not None else 2 * p.degree() + 1)
    target = p.trunc if trunc is None else min(trunc, p.trunc)
    buckets: Dict[int, Dict[Monomial, Fraction]] = defaultdict(dict)
    for k, c in p.terms():
        for mono, coeff in c.items():
            for power, new_mono, factor in _phi_monomial(mono):
                e = k + power
                if e >= target:
                    continue
                bucket = buckets[e]
                bucket[new_mono] = bucket.get(new_mono, 0) + coeff * factor
    if not buckets:
        return EpsSeries.zero(target)
    lo = min(buckets)
    coeffs = [
        DiffPoly._from_clean({m: c for m, c in buckets.get(e, {}).items() if c})
        for e in range(lo, target)
    ]
    return EpsSeries(coeffs, target, lo)


_PHI_INV_SHIFT = {V: Fraction(2), W: Fraction(-1)}


def phi_inv(
    p: SeriesLike, tail_degree: Optional[int] = None, trunc: Optional[int] = None
) -> EpsSeries:
    """
    Inverse of phi: v^(0) -> ε^-2 (v^(0) + 2), w^(0) -> ε^-2 (w^(0) - 1), v^(j) -> ε^-2 v^(j).

    A monomial of degree d moves down by ε^(2d), so the output may be Laurent.
    The unknown tail of a series (powers >= p.trunc) has degree at most
    tail_degree, so the result is known modulo ε^(p.trunc - 2·tail_degree).

    Args:
        p: An exact polynomial, which has no tail, or a truncated series.
        tail_degree: Degree bound on the unknown tail; required for a series.
        trunc: Truncate the result further.

    Raises:
        ValueError: a series without tail_degree, or a negative tail_degree
    """
    if isinstance(p, DiffPoly):
        # an exact polynomial has no tail; its image lives in powers <= 0
        p = EpsSeries.from_poly(p, 1 + 2 * p.degree())
        tail_degree = 0
    elif tail_degree is None:
        raise ValueError("phi_inv of a truncated series needs the degree of its tail")
    if tail_degree < 0:
        raise ValueError(f"tail degree must be >= 0, got {tail_degree}")
    target = p.trunc - 2 * tail_degree
    if trunc is not None:
        target = min(target, trunc)
    buckets: Dict[int, Dict[Monomial, Fraction]] = defaultdict(dict)
    for k, c in p.terms():
        for mono, coeff in c.items():
            degree = sum(exp for _, exp in mono)
            e = k - 2 * degree
            if e >= target:
                continue
            # expand the shifted order-0 factors
            partial_terms: Dict[Monomial, Fraction] = {(): coeff}
            for gen, exp in mono:
                if gen.order == 0:
                    shift = _PHI_INV_SHIFT[gen.letter]
                    factor_terms = {
                        (((gen, i),) if i else ()): comb(exp, i) * shift ** (exp - i)
                        for i in range(exp + 1)
                    }
                else:
                    factor_terms = {((gen, exp),): Fraction(1)}
                merged: Dict[Monomial, Fraction] = {}
                for m1, c1 in partial_terms.items():
                    for m2, c2 in factor_terms.items():
                        key = tuple(sorted(m1 + m2))
                        merged[key] = merged.get(key, 0) + c1 * c2
                partial_terms = merged
            bucket = buckets[e]
            for m, c2 in partial_terms.items():
                bucket[m] = bucket.get(m, 0) + c2
    if not buckets:
        return EpsSeries.zero(target)
    lo = min(buckets)
    coeffs = [
        DiffPoly._from_clean({m: c for m, c in buckets.get(e, {}).items() if c})
        for e in range(lo, target)
    ]
    return EpsSeries(coeffs, target, lo)


def conjugate(D: TameDerivation) -> TameDerivation:
    """
    D_Φ = Φ D Φ^-1.

    D kills constants, so D_Φ(v^(0)) = ε^-2 Φ(D(v^(0))) and likewise for
    w^(0). The result is known modulo ε^(D.trunc - 2).

    Raises:
        NotTame: a negative power of ε survives in either image
    """
    images = {}
    for letter, img in ((V, D.img_v), (W, D.img_w)):
        conj = phi(img).shift(-2)
        if not conj.is_zero() and conj.min_exp < 0:
            raise NotTame(f"{letter}0", conj.min_exp)
        images[letter] = conj
    logger.debug(
        "Derivation conjugated",
        trunc=min(images[V].trunc, images[W].trunc),
        monomials=images[V].monomial_count() + images[W].monomial_count(),
    )
    return TameDerivation(images[V], images[W])


# --- σ_Q: v^(j) -> ∂^j Q --------------------------------------------------------


class _SigmaContext:
    def __init__(self, Q: EpsSeries, trunc: int):
        self.trunc = trunc
        self.derivs: List[EpsSeries] = [Q.truncate(trunc)]
        self.powers: Dict[Tuple[int, int], EpsSeries] = {}

    def derivative(self, j: int) -> EpsSeries:
        while len(self.derivs) <= j:
            self.derivs.append(self.derivs[-1].partial())
        return self.derivs[j]

    def power(self, j: int, exp: int, trunc: int) -> EpsSeries:
        key = (j, exp)
        value = self.powers.get(key)
        if value is None:
            value = self.derivative(j) ** exp
            self.powers[key] = value
        return value.truncate(trunc)


def _sigma_poly(ctx: _SigmaContext, c: DiffPoly, trunc: int) -> EpsSeries:
    groups: Dict[Monomial, Dict[Monomial, Fraction]] = {}
    for mono, coeff in c.items():
        v_part = tuple((g, e) for g, e in mono if g.letter == V)
        w_part = tuple((g, e) for g, e in mono if g.letter == W)
        groups.setdefault(v_part, {})[w_part] = coeff
    total = EpsSeries.zero(trunc)
    for v_part in sorted(groups):
        w_poly = DiffPoly._from_clean(groups[v_part])
        factor = EpsSeries.from_poly(w_poly, trunc)
        for gen, exp in v_part:
            factor = factor * ctx.power(gen.order, exp, trunc)
        total = total + factor
    return total


def substitute_sigma(Q: EpsSeries, p: SeriesLike) -> EpsSeries:
    """
    σ_Q: replace every v^(j) in p by ∂^j Q.

    Q must lie in R_0[[ε]] with valuation >= 0. Coefficients of p free of v
    pass through untouched, so their truncation is not limited by Q's.
    """
    if not Q.is_w_only():
        raise ValueError("substitute_sigma needs Q without v-generators")
    if not Q.is_zero() and Q.min_exp < 0:
        raise TruncationMismatch(Q.min_exp, Q.trunc)
    p = _as_series(p, Q.trunc)
    if p.is_w_only():
        return p

    target = p.trunc
    for k, c in p.terms():
        if not c.is_w_only():
            target = min(target, k + Q.trunc)
    ctx = _SigmaContext(Q, target - p.min_exp)
    total = EpsSeries.zero(target)
    for k, c in p.terms():
        if k >= target:
            break
        if c.is_w_only():
            piece = EpsSeries.from_poly(c, target - k)
        else:
            piece = _sigma_poly(ctx, c, target - k)
        total = total + piece.shift(k).extend(target)
    return total.truncate(target)
