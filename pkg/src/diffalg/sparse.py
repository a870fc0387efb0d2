from fractions import Fraction
from numbers import Rational
from typing import (
    Any,
    Callable,
    Dict,
    Generic,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Tuple,
    TypeVar,
)

from diffalg.errors import IrrationalConstant

G = TypeVar("G")

# sorted tuple of (generator, exponent) pairs, exponents positive
Monomial = Tuple[Tuple[Any, int], ...]

ONE: Monomial = ()


def mul_monomials(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for gen, exp in b:
        merged[gen] = merged.get(gen, 0) + exp
    return tuple(sorted(merged.items()))


def monomial_degree(m: Monomial) -> int:
    return sum(exp for _, exp in m)


def monomial_key(m: Monomial):
    """Graded lexicographic sort key."""
    return (monomial_degree(m), m)


def assert_rational(value: Any) -> Fraction:
    """Convert an exact rational to Fraction, refusing floats and other inexact values."""
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    raise IrrationalConstant(value)


class SparsePoly(Generic[G]):
    """
    Immutable sparse polynomial: a map from monomials to nonzero coefficients.

    Subclasses fix the generator type and may widen the set of accepted scalar
    coefficient types through `_scalar_types`. Coefficients only need ring
    operations, `==` and truthiness (zero is falsy).
    """

    __slots__ = ("_terms", "_hash")

    _scalar_types: Tuple[type, ...] = (int, Fraction)

    def __init__(self, terms: Optional[Mapping[Monomial, Any]] = None):
        cleaned: Dict[Monomial, Any] = {}
        if terms:
            for mono, coeff in terms.items():
                coeff = self._coerce_coeff(coeff)
                if coeff:
                    cleaned[mono] = coeff
        self._terms = cleaned
        self._hash: Optional[int] = None

    @classmethod
    def _coerce_coeff(cls, coeff: Any) -> Any:
        if isinstance(coeff, (int, Fraction)) and not isinstance(coeff, bool):
            return Fraction(coeff)
        if isinstance(coeff, cls._scalar_types):
            return coeff
        return assert_rational(coeff)

    @classmethod
    def _from_clean(cls, terms: Dict[Monomial, Any]):
        poly = cls.__new__(cls)
        poly._terms = terms
        poly._hash = None
        return poly

    @classmethod
    def zero(cls):
        return cls._from_clean({})

    @classmethod
    def constant(cls, value: Any):
        value = cls._coerce_coeff(value)
        return cls._from_clean({ONE: value} if value else {})

    @classmethod
    def generator(cls, gen: G, exp: int = 1):
        return cls._from_clean({((gen, exp),): Fraction(1)})

    # --- inspection -------------------------------------------------------

    @property
    def terms(self) -> Mapping[Monomial, Any]:
        return self._terms

    def items(self) -> Iterator[Tuple[Monomial, Any]]:
        return iter(self._terms.items())

    def sorted_terms(self) -> List[Tuple[Monomial, Any]]:
        return sorted(self._terms.items(), key=lambda item: monomial_key(item[0]))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(mono == ONE for mono in self._terms)

    def constant_term(self) -> Any:
        return self._terms.get(ONE, Fraction(0))

    def coefficient(self, mono: Monomial) -> Any:
        return self._terms.get(mono, Fraction(0))

    def generators(self) -> List[G]:
        return sorted({gen for mono in self._terms for gen, _ in mono})

    def degree(self) -> int:
        return max((monomial_degree(m) for m in self._terms), default=0)

    def degree_in(self, gen: G) -> int:
        return max(
            (exp for mono in self._terms for g, exp in mono if g == gen), default=0
        )

    # --- arithmetic -------------------------------------------------------

    def _coerce(self, other: Any):
        if isinstance(other, type(self)):
            return other
        if isinstance(other, SparsePoly):
            return NotImplemented
        if isinstance(other, (float, complex)):
            raise IrrationalConstant(other)
        if isinstance(other, self._scalar_types) or isinstance(other, Rational):
            return type(self).constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        result = dict(self._terms)
        for mono, coeff in other._terms.items():
            total = result.get(mono)
            total = coeff if total is None else total + coeff
            if total:
                result[mono] = total
            else:
                result.pop(mono, None)
        return type(self)._from_clean(result)

    __radd__ = __add__

    def __neg__(self):
        return type(self)._from_clean({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, factor: Any):
        factor = self._coerce_coeff(factor)
        if not factor:
            return type(self).zero()
        return type(self)._from_clean({m: c * factor for m, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (self._scalar_types + (Rational,))) and not isinstance(
            other, SparsePoly
        ):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        result: Dict[Monomial, Any] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = mul_monomials(m1, m2)
                total = result.get(mono)
                result[mono] = c1 * c2 if total is None else total + c1 * c2
        return type(self)._from_clean({m: c for m, c in result.items() if c})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError("negative powers are not polynomials")
        result = type(self).constant(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, SparsePoly):
            return type(self) is type(other) and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({ONE: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, frozenset(self._terms.items())))
        return self._hash

    # --- calculus and substitution ----------------------------------------

    def diff(self, gen: G):
        """Partial derivative with respect to one generator."""
        result: Dict[Monomial, Any] = {}
        for mono, coeff in self._terms.items():
            for i, (g, exp) in enumerate(mono):
                if g != gen:
                    continue
                if exp == 1:
                    new_mono = mono[:i] + mono[i + 1:]
                else:
                    new_mono = mono[:i] + ((g, exp - 1),) + mono[i + 1:]
                result[new_mono] = result.get(new_mono, 0) + coeff * exp
        return type(self)._from_clean({m: c for m, c in result.items() if c})

    def integrate(self, gen: G):
        """Formal antiderivative with respect to one generator, zero constant."""
        result: Dict[Monomial, Any] = {}
        for mono, coeff in self._terms.items():
            exponents = dict(mono)
            exp = exponents.get(gen, 0)
            exponents[gen] = exp + 1
            new_mono = tuple(sorted(exponents.items()))
            result[new_mono] = coeff / (exp + 1)
        return type(self)._from_clean(result)

    def map_generators(self, fn: Callable[[G], Any], target: Optional[type] = None):
        """Rename generators through an injective map, e.g. a lattice shift."""
        klass = target or type(self)
        result: Dict[Monomial, Any] = {}
        for mono, coeff in self._terms.items():
            new_mono = tuple(sorted((fn(g), exp) for g, exp in mono))
            result[new_mono] = result.get(new_mono, 0) + coeff
        return klass._from_clean({m: c for m, c in result.items() if c})

    def split_by(self, gen: G) -> Dict[int, Any]:
        """Coefficients as a polynomial in `gen`: exponent -> cofactor polynomial."""
        parts: Dict[int, Dict[Monomial, Any]] = {}
        for mono, coeff in self._terms.items():
            exp = 0
            rest = []
            for g, e in mono:
                if g == gen:
                    exp = e
                else:
                    rest.append((g, e))
            parts.setdefault(exp, {})[tuple(rest)] = coeff
        return {exp: type(self)._from_clean(terms) for exp, terms in parts.items()}

    def evaluate(
        self,
        assign: Callable[[G], Any],
        zero: Any = 0,
        coeff: Optional[Callable[[Any], Any]] = None,
    ) -> Any:
        """
        Substitute a value for every generator and sum in canonical term order.

        Args:
            assign: generator -> value in the target ring
            zero: additive identity of the target ring
            coeff: optional conversion applied to each coefficient first
                   (e.g. `float` before multiplying numpy arrays)

        Returns:
            The value of the polynomial in the target ring.
        """
        powers: Dict[Tuple[Any, int], Any] = {}
        total = zero
        for mono, c in self.sorted_terms():
            term = coeff(c) if coeff is not None else c
            for gen, exp in mono:
                key = (gen, exp)
                value = powers.get(key)
                if value is None:
                    value = assign(gen)
                    if exp > 1:
                        value = value ** exp
                    powers[key] = value
                term = term * value
            total = total + term
        return total

    # --- text -------------------------------------------------------------

    @staticmethod
    def _format_generator(gen: Any) -> str:
        return str(gen)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, coeff in self.sorted_terms():
            factors = [
                self._format_generator(g) + (f"^{e}" if e > 1 else "") for g, e in mono
            ]
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append("*".join(factors))
            elif coeff == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{coeff}*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"
