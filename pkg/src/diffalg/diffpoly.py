from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, NamedTuple, Optional, Tuple, Union

from diffalg.errors import NotExact
from diffalg.sparse import Monomial, SparsePoly

V = "v"
W = "w"


class Generator(NamedTuple):
    """v^(order) or w^(order); tuple order gives (letter, order) with v < w."""
    letter: str
    order: int

    def next(self) -> "Generator":
        return Generator(self.letter, self.order + 1)

    def __str__(self) -> str:
        return f"{self.letter}{self.order}"


class DiffPoly(SparsePoly[Generator]):
    """Element of R = Q[v^(0), w^(0), v^(1), w^(1), ...] with exact rational coefficients."""

    __slots__ = ()

    def partial(self) -> "DiffPoly":
        """The derivation ∂: v^(k) -> v^(k+1), w^(k) -> w^(k+1), Leibniz."""
        result: Dict[Monomial, Fraction] = {}
        for mono, coeff in self._terms.items():
            for i, (gen, exp) in enumerate(mono):
                exponents = dict(mono)
                if exp == 1:
                    del exponents[gen]
                else:
                    exponents[gen] = exp - 1
                succ = gen.next()
                exponents[succ] = exponents.get(succ, 0) + 1
                new_mono = tuple(sorted(exponents.items()))
                result[new_mono] = result.get(new_mono, 0) + coeff * exp
        return DiffPoly._from_clean({m: c for m, c in result.items() if c})

    def partial_n(self, n: int) -> "DiffPoly":
        result = self
        for _ in range(n):
            result = result.partial()
        return result

    def max_order(self, letter: Optional[str] = None) -> int:
        """Highest derivative order present (-1 if no matching generator)."""
        return max(
            (
                gen.order
                for mono in self._terms
                for gen, _ in mono
                if letter is None or gen.letter == letter
            ),
            default=-1,
        )

    def has_letter(self, letter: str) -> bool:
        return any(gen.letter == letter for mono in self._terms for gen, _ in mono)

    def is_w_only(self) -> bool:
        return not self.has_letter(V)


def v(order: int = 0) -> DiffPoly:
    return DiffPoly.generator(Generator(V, order))


def w(order: int = 0) -> DiffPoly:
    return DiffPoly.generator(Generator(W, order))


def _require_w_only(p: DiffPoly, what: str) -> None:
    if not p.is_w_only():
        raise ValueError(f"{what} needs an element of R_0 (no v-generators), got {p}")


def partial(p):
    """∂ on DiffPoly or EpsSeries (∂ε = 0)."""
    return p.partial()


def var_derivative(d: DiffPoly) -> DiffPoly:
    """Euler operator Σ_k (-1)^k ∂^k (∂d/∂w^(k)) on R_0."""
    _require_w_only(d, "var_derivative")
    total = DiffPoly.zero()
    for k in range(d.max_order(W) + 1):
        term = d.diff(Generator(W, k)).partial_n(k)
        total = total + term if k % 2 == 0 else total - term
    return total


def antiderivative(g: DiffPoly) -> DiffPoly:
    """
    E with ∂E = g and zero constant term.

    Eliminates the highest generator: an exact g is linear in its top
    generator w^(m) with cofactor ∂E/∂w^(m-1), so integrating that cofactor in
    w^(m-1) and subtracting its ∂ lowers the top order. Anything left at
    order 0 is not a derivative.

    Raises:
        NotExact: g is not a total derivative
    """
    _require_w_only(g, "antiderivative")
    if g.constant_term():
        raise NotExact(g, var_derivative(g))

    result = DiffPoly.zero()
    remainder = g
    while remainder:
        top = remainder.max_order(W)
        top_gen = Generator(W, top)
        if top <= 0 or remainder.degree_in(top_gen) > 1:
            raise NotExact(g, var_derivative(g))
        cofactor = remainder.split_by(top_gen).get(1, DiffPoly.zero())
        piece = cofactor.integrate(Generator(W, top - 1))
        result = result + piece
        remainder = remainder - piece.partial()
    return result


def is_exact(g: DiffPoly) -> bool:
    return not var_derivative(g)


@dataclass(frozen=True)
class WeightProfile:
    amp_v: int
    amp_w: int
    diff: int

    def __add__(self, other: "WeightProfile") -> "WeightProfile":
        return WeightProfile(
            self.amp_v + other.amp_v, self.amp_w + other.amp_w, self.diff + other.diff
        )

    def combined(self, v_weight: int = 1) -> int:
        """Amplitude scaling weight (v -> u v, w -> u^2 w) plus derivative count."""
        return v_weight * self.amp_v + 2 * self.amp_w + self.diff


@dataclass(frozen=True)
class Inhomogeneous:
    profiles: Tuple[WeightProfile, ...]


def monomial_profile(mono: Monomial) -> WeightProfile:
    amp_v = sum(exp for gen, exp in mono if gen.letter == V)
    amp_w = sum(exp for gen, exp in mono if gen.letter == W)
    diff = sum(gen.order * exp for gen, exp in mono)
    return WeightProfile(amp_v, amp_w, diff)


def weight_profile(p: DiffPoly) -> Union[WeightProfile, Inhomogeneous]:
    # the zero polynomial reports the empty profile
    profiles = sorted(
        {monomial_profile(mono) for mono in p.terms},
        key=lambda wp: (wp.amp_v, wp.amp_w, wp.diff),
    )
    if not profiles:
        return WeightProfile(0, 0, 0)
    if len(profiles) == 1:
        return profiles[0]
    return Inhomogeneous(tuple(profiles))


def combined_weight(p: DiffPoly, v_weight: int = 1) -> Optional[int]:
    """Common combined weight of all monomials, None when they disagree."""
    weights = {monomial_profile(mono).combined(v_weight) for mono in p.terms}
    if len(weights) == 1:
        return weights.pop()
    return None
